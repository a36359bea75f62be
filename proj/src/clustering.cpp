#include <algorithm>
#include <limits>
#include <map>

#include "finece/pipeline.hpp"

namespace finece {

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix pairwise(const std::vector<Embedding>& vecs) {
  Matrix d(vecs.size(), std::vector<double>(vecs.size(), 0.0));
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = i + 1; j < vecs.size(); ++j) d[i][j] = d[j][i] = cosine_distance(vecs[i], vecs[j]);
  return d;
}

}  // namespace

ClusteringResult cluster_fragments(const std::vector<std::string>& fragments, int m,
                                   const Embedder& embedder) {
  if (m <= 0) throw ArgumentError("cluster count m must be positive");
  if (fragments.empty()) throw ArgumentError("no fragments to cluster");

  // Work on distinct texts; multiplicities weight the medoid update.
  std::vector<std::size_t> first_index;      // distinct -> first input index
  std::vector<double> weight;                // distinct -> multiplicity
  std::vector<std::size_t> distinct_of(fragments.size());
  std::map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    auto [it, inserted] = seen.emplace(fragments[i], first_index.size());
    if (inserted) {
      first_index.push_back(i);
      weight.push_back(0.0);
    }
    distinct_of[i] = it->second;
    weight[it->second] += 1.0;
  }
  const std::size_t nd = first_index.size();
  const std::size_t km = std::min<std::size_t>(static_cast<std::size_t>(m), nd);

  std::vector<Embedding> vecs;
  vecs.reserve(nd);
  for (std::size_t d = 0; d < nd; ++d) vecs.push_back(embedder.embed(fragments[first_index[d]]));
  const Matrix dist = pairwise(vecs);

  // Farthest-first initialisation from the lexicographically smallest text.
  std::vector<std::size_t> medoids;
  std::size_t start = 0;
  for (std::size_t d = 1; d < nd; ++d)
    if (fragments[first_index[d]] < fragments[first_index[start]]) start = d;
  medoids.push_back(start);
  while (medoids.size() < km) {
    std::size_t best = nd;
    double best_gap = -1.0;
    for (std::size_t d = 0; d < nd; ++d) {
      if (std::find(medoids.begin(), medoids.end(), d) != medoids.end()) continue;
      double gap = std::numeric_limits<double>::infinity();
      for (auto c : medoids) gap = std::min(gap, dist[d][c]);
      if (gap > best_gap) {
        best_gap = gap;
        best = d;
      }
    }
    medoids.push_back(best);
  }

  std::vector<std::size_t> assign(nd, 0);
  auto reassign = [&] {
    for (std::size_t d = 0; d < nd; ++d) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < medoids.size(); ++c)
        if (dist[d][medoids[c]] < dist[d][medoids[best]]) best = c;
      assign[d] = best;
    }
    // A medoid always belongs to its own cluster, even at zero distance to another.
    for (std::size_t c = 0; c < medoids.size(); ++c) assign[medoids[c]] = c;
  };

  reassign();
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t c = 0; c < medoids.size(); ++c) {
      std::size_t best = medoids[c];
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t d = 0; d < nd; ++d) {
        if (assign[d] != c) continue;
        double cost = 0.0;
        for (std::size_t e = 0; e < nd; ++e)
          if (assign[e] == c) cost += weight[e] * dist[d][e];
        if (cost < best_cost - 1e-15 ||
            (std::abs(cost - best_cost) <= 1e-15 && first_index[d] < first_index[best])) {
          best_cost = cost;
          best = d;
        }
      }
      if (best != medoids[c]) {
        medoids[c] = best;
        changed = true;
      }
    }
    if (!changed) break;
    reassign();
  }

  ClusteringResult result;
  result.requested_m = m;
  result.effective_m = static_cast<int>(km);
  result.clusters.resize(km);
  for (std::size_t c = 0; c < km; ++c) result.clusters[c].medoid = first_index[medoids[c]];
  for (std::size_t i = 0; i < fragments.size(); ++i)
    result.clusters[assign[distinct_of[i]]].members.push_back(i);
  std::sort(result.clusters.begin(), result.clusters.end(),
            [](const auto& a, const auto& b) { return a.medoid < b.medoid; });
  return result;
}

std::size_t select_representative(const std::vector<std::string>& texts,
                                  const Embedder& embedder) {
  if (texts.empty()) throw ArgumentError("no candidates to choose from");
  std::vector<Embedding> vecs;
  vecs.reserve(texts.size());
  for (const auto& t : texts) vecs.push_back(embedder.embed(t));
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < texts.size(); ++j)
      if (i != j) sum += cosine_distance(vecs[i], vecs[j]);
    if (sum < best_sum - 1e-15) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

const Completion& select_representative(const std::vector<Completion>& completions,
                                        const Embedder& embedder) {
  std::vector<std::string> texts;
  texts.reserve(completions.size());
  for (const auto& c : completions) texts.push_back(c.text);
  return completions[select_representative(texts, embedder)];
}

}  // namespace finece
