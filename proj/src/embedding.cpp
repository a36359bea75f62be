#include "finece/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "rng.hpp"

namespace finece {

Embedding HashedTrigramEmbedder::embed(std::string_view text) const {
  std::string low(text);
  for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  Embedding v(dim_, 0.0);
  if (low.empty()) return v;
  if (low.size() < 3) {
    v[detail::fnv1a(low) % dim_] += 1.0;
  } else {
    for (std::size_t i = 0; i + 3 <= low.size(); ++i)
      v[detail::fnv1a(std::string_view(low).substr(i, 3)) % dim_] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

const Embedder& default_embedder() {
  static const HashedTrigramEmbedder embedder;
  return embedder;
}

double cosine_distance(const Embedding& a, const Embedding& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) dot += a[i] * b[i];
  for (double x : a) na += x * x;
  for (double x : b) nb += x * x;
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 1.0;
  double cos = dot / std::sqrt(na * nb);
  cos = std::clamp(cos, -1.0, 1.0);
  double d = 1.0 - cos;
  // Identical unit vectors can leave a few ulps of rounding.
  return d < 1e-12 ? 0.0 : d;
}

}  // namespace finece
