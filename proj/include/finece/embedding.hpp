#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace finece {

using Embedding = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
};

// L2-normalised counts of lowercased character 3-grams hashed into `dim`
// buckets. Texts shorter than three characters contribute one whole-text gram.
class HashedTrigramEmbedder : public Embedder {
 public:
  explicit HashedTrigramEmbedder(std::size_t dim = 1024) : dim_(dim) {}
  Embedding embed(std::string_view text) const override;
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
};

const Embedder& default_embedder();

// 1 - cosine similarity. Zero vectors are at distance 1 from everything except
// another zero vector.
double cosine_distance(const Embedding& a, const Embedding& b);

}  // namespace finece
