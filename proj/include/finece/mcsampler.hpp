#pragma once

// Monte-Carlo confidence: the fraction of k sampled continuations of a
// sequence whose final answer matches the gold answer.

#include <optional>
#include <string>
#include <vector>

#include "finece/core.hpp"
#include "finece/generator.hpp"

namespace finece {

struct SamplingPlan {
  int k = 30;
  GenerationConfig config;
  // Overrides the question's own matcher when set.
  std::optional<MatcherKind> matcher;
  // Samples requested per generator call; 0 means all k in one call.
  int batch_size = 0;

  void validate() const;
};

struct ConfidenceEstimate {
  ConfidenceRecord record;
  std::vector<Completion> completions;
  std::vector<std::string> full_answers;  // prefix joined with each continuation
  std::vector<bool> correct;
};

// Prompt for continuing `seq` of question `q`.
Prompt make_prompt(const Question& q, const SequenceState& seq);

// Whether a complete answer text is correct for `q` under `kind`.
bool answer_is_correct(const Question& q, std::string_view full_answer, MatcherKind kind);

ConfidenceEstimate estimate_confidence(const Question& question, const SequenceState& seq,
                                       const SamplingPlan& plan, Generator& gen);

// Outcome-level score of a finished answer: 1.0 if it matches gold, else 0.0.
ConfidenceRecord score_full_answer(const Question& question, const SequenceState& seq,
                                   std::optional<MatcherKind> matcher = std::nullopt);

}  // namespace finece
