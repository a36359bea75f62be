#pragma once

// Shared domain types: questions, sequences, completions, confidence records,
// and the answer-matching rules every estimator relies on.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finece/errors.hpp"

namespace finece {

enum class MatcherKind { ExactNormalized, NumericFinalAnswer };

enum class SequenceKind { Question, QuestionWithPartialAnswer, QuestionWithAnswer };

enum class FinishReason { Stop, Length, Error };

struct Question {
  std::string id;
  std::string text;
  std::string gold_answer;
  MatcherKind matcher_kind = MatcherKind::NumericFinalAnswer;

  // Throws ConfigError when text or gold answer is blank.
  void validate() const;
};

// The conditioning sequence s: a question plus an optional answer prefix.
struct SequenceState {
  std::string question_id;
  std::string prefix_text;
  SequenceKind kind = SequenceKind::Question;
  int position_index = 0;

  static SequenceState question(std::string question_id);
  static SequenceState partial(std::string question_id, std::string prefix, int position_index);
  static SequenceState full(std::string question_id, std::string answer, int position_index);

  // Kind/prefix agreement: Question iff the prefix is empty.
  void validate() const;
};

struct TokenAlternative {
  std::string token;
  double logprob = 0.0;
};

struct Completion {
  std::string text;
  std::vector<std::string> tokens;
  std::optional<std::vector<double>> token_logprobs;
  std::optional<std::vector<std::vector<TokenAlternative>>> top_logprobs;
  FinishReason finish_reason = FinishReason::Stop;

  bool has_logprobs() const noexcept { return token_logprobs.has_value(); }
  bool has_top_logprobs() const noexcept { return top_logprobs.has_value(); }

  // Checks token/logprob alignment, logprob <= 0 and that tokens spell out text.
  void validate() const;
};

struct ConfidenceRecord {
  SequenceState sequence;
  double raw_conf = 0.0;
  int k_used = 1;
  int n_correct = 0;
  std::optional<double> adjusted_conf;
  std::optional<bool> is_final_correct;

  static ConfidenceRecord from_counts(SequenceState seq, int n_correct, int k_used);
  void validate() const;
};

class PartialResultError : public Error {
 public:
  PartialResultError(const std::string& what, std::vector<Completion> gathered)
      : Error(what), gathered_(std::move(gathered)) {}
  const std::vector<Completion>& gathered() const noexcept { return gathered_; }

 private:
  std::vector<Completion> gathered_;
};

// Splits text into tokens that carry their leading whitespace
// ("The answer\n\nis" -> "The", " answer", "\n\nis"). Concatenation is lossless.
std::vector<std::string> whitespace_tokenize(std::string_view text);

// Appends a continuation to an answer prefix, inserting a single space only
// when neither side supplies whitespace at the seam.
std::string join_continuation(std::string_view prefix, std::string_view continuation);

// Lowercase, strip ASCII punctuation, collapse whitespace, trim.
std::string normalize_answer(std::string_view text);

// Decimal literals in order of appearance, canonicalised ("1,200.50" -> "1200.5",
// "-0" -> "0"). Exact, no floating point involved.
std::vector<std::string> numeric_literals(std::string_view text);

// The text after the last "answer is" marker (case-insensitive), trimmed and
// without trailing sentence punctuation; the whole text when there is no marker.
std::string extract_final_answer(std::string_view text);

// Indicator of a match between a candidate and the gold answer.
bool match_answer(std::string_view candidate, std::string_view gold, MatcherKind kind);

std::string_view to_string(MatcherKind kind);
std::string_view to_string(SequenceKind kind);
std::string_view to_string(FinishReason reason);
MatcherKind parse_matcher_kind(std::string_view s);
SequenceKind parse_sequence_kind(std::string_view s);
FinishReason parse_finish_reason(std::string_view s);

std::string trim(std::string_view s);

}  // namespace finece
