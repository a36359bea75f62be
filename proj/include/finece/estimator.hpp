#pragma once

// Confidence estimation at inference time: for a single sequence, or at the
// calibration positions of an answer while it is being generated.

#include <functional>
#include <optional>
#include <vector>

#include "finece/bci.hpp"
#include "finece/core.hpp"
#include "finece/generator.hpp"
#include "finece/mcsampler.hpp"
#include "finece/metrics.hpp"
#include "finece/positions.hpp"

namespace finece {

struct EstimateOptions {
  SamplingPlan plan;               // Monte-Carlo sampling at every position
  GenerationConfig answer_config;  // the answer being monitored (n is ignored)
  PositionStrategy positions;
  BciParams bci;
};

struct PositionRecord {
  ConfidenceRecord record;
  std::optional<CalibrationPosition> position;  // empty for a sequence given as input
  std::optional<double> token_ratio;            // known once the answer is complete
  std::optional<PositionTag> tag;
  std::optional<BciResult> bci;
  std::size_t tokens_generated = 0;  // answer tokens produced when the record was made
};

struct AnswerEstimate {
  Completion answer;
  std::vector<PositionRecord> records;
  bool final_correct = false;
};

using RecordSink = std::function<void(const PositionRecord&)>;

// Confidence of one sequence: Monte-Carlo for questions and partial answers
// (revised by BCI when its parameters are non-trivial), exact scoring for
// complete answers.
PositionRecord estimate_sequence(const Question& question, const SequenceState& seq,
                                 Generator& gen, const EstimateOptions& options);

// Streams an answer continuing `start` and estimates confidence at each
// calibration position as soon as it is detected. `on_record` sees each record
// before the rest of the answer is generated; token ratios, position tags and
// final correctness are filled in afterwards.
AnswerEstimate estimate_along_answer(const Question& question, const SequenceState& start,
                                     Generator& gen, const EstimateOptions& options,
                                     const RecordSink& on_record = {});

}  // namespace finece
