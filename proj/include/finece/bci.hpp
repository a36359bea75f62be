#pragma once

// Backward confidence integration: revise the confidence at a calibration
// position with the adjusted confidences of sampled future positions.
//
//   adj(h) = raw(h)                                              h == j + d
//   adj(h) = alpha * raw(h) + (1 - alpha) * mean_b adj(h + 1, b)  h <  j + d
//
// In the default mode every node re-branches into w continuations (w^d
// leaves). Path mode samples w continuations once at j and follows each as a
// single path down to depth d.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "finece/core.hpp"
#include "finece/generator.hpp"
#include "finece/mcsampler.hpp"
#include "finece/positions.hpp"

namespace finece {

struct BciParams {
  double alpha = 0.5;
  int width = 0;
  int depth = 0;
  bool path_mode = false;

  void validate() const;
  // No revision happens: alpha == 1, or no width or depth to integrate over.
  bool trivial() const noexcept { return alpha == 1.0 || width == 0 || depth == 0; }
};

struct BciResult {
  double adjusted = 0.0;
  double raw = 0.0;
  int depth_reached = 0;         // deepest level actually integrated
  bool truncated_early = false;  // some branch ended before depth d
  std::size_t nodes_evaluated = 0;
};

using RawConfidenceFn = std::function<double(const SequenceState&)>;
// Up to `width` continuations of a sequence, each ending at its next
// calibration position. Empty when the sequence cannot be continued.
using ContinuationFn = std::function<std::vector<SequenceState>(const SequenceState&, int width)>;

BciResult integrate(const SequenceState& seq, const RawConfidenceFn& raw_conf,
                    const ContinuationFn& continuation, const BciParams& params);

// Monte-Carlo raw confidence with a per-prefix cache; finished answers are
// scored by correctness instead of sampled.
class CachedMonteCarloConfidence {
 public:
  CachedMonteCarloConfidence(Question question, Generator& gen, SamplingPlan plan);
  double operator()(const SequenceState& seq);
  const ConfidenceRecord& record(const SequenceState& seq);

 private:
  Question question_;
  Generator& gen_;
  SamplingPlan plan_;
  std::map<std::pair<int, std::string>, ConfidenceRecord> cache_;
};

// Continuations sampled from a generator and cut at the next calibration
// position of `strategy`. Sampled once per sequence and cached.
class SampledContinuation {
 public:
  SampledContinuation(Question question, Generator& gen, GenerationConfig config,
                      PositionStrategy strategy);
  std::vector<SequenceState> operator()(const SequenceState& seq, int width);

 private:
  Question question_;
  Generator& gen_;
  GenerationConfig config_;
  PositionStrategy strategy_;
  std::map<std::pair<std::string, int>, std::vector<SequenceState>> cache_;
};

}  // namespace finece
