#include "finece/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace finece {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Canonical form of a decimal literal: no sign for zero, no leading zeros in the
// integer part, no trailing zeros in the fraction.
std::string canonical_decimal(bool negative, std::string int_part, std::string frac_part) {
  auto first = int_part.find_first_not_of('0');
  int_part = first == std::string::npos ? "0" : int_part.substr(first);
  auto last = frac_part.find_last_not_of('0');
  frac_part = last == std::string::npos ? "" : frac_part.substr(0, last + 1);
  bool zero = int_part == "0" && frac_part.empty();
  std::string out = (negative && !zero) ? "-" : "";
  out += int_part;
  if (!frac_part.empty()) out += "." + frac_part;
  return out;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

void Question::validate() const {
  if (trim(text).empty()) throw ConfigError("question '" + id + "' has empty text");
  if (trim(gold_answer).empty()) throw ConfigError("question '" + id + "' has empty gold answer");
  if (matcher_kind == MatcherKind::NumericFinalAnswer && numeric_literals(gold_answer).empty())
    throw ConfigError("question '" + id + "': gold answer '" + gold_answer +
                      "' has no numeric literal");
}

SequenceState SequenceState::question(std::string question_id) {
  return {std::move(question_id), "", SequenceKind::Question, 0};
}

SequenceState SequenceState::partial(std::string question_id, std::string prefix,
                                     int position_index) {
  return {std::move(question_id), std::move(prefix), SequenceKind::QuestionWithPartialAnswer,
          position_index};
}

SequenceState SequenceState::full(std::string question_id, std::string answer,
                                  int position_index) {
  return {std::move(question_id), std::move(answer), SequenceKind::QuestionWithAnswer,
          position_index};
}

void SequenceState::validate() const {
  bool empty = prefix_text.empty();
  if ((kind == SequenceKind::Question) != empty)
    throw ArgumentError("sequence kind '" + std::string(to_string(kind)) +
                        "' disagrees with prefix emptiness");
  if (position_index < 0) throw ArgumentError("negative position index");
}

void Completion::validate() const {
  if (token_logprobs) {
    if (token_logprobs->size() != tokens.size())
      throw ArgumentError("token_logprobs length differs from tokens length");
    for (double lp : *token_logprobs)
      if (!(lp <= 0.0)) throw ArgumentError("token logprob must be <= 0");
  }
  if (top_logprobs) {
    if (top_logprobs->size() != tokens.size())
      throw ArgumentError("top_logprobs length differs from tokens length");
    for (const auto& alts : *top_logprobs)
      for (const auto& a : alts)
        if (!(a.logprob <= 0.0)) throw ArgumentError("alternative logprob must be <= 0");
  }
  std::size_t total = 0;
  for (const auto& t : tokens) total += t.size();
  if (total != text.size() ||
      std::accumulate(tokens.begin(), tokens.end(), std::string()) != text)
    throw ArgumentError("tokens do not concatenate to completion text");
}

ConfidenceRecord ConfidenceRecord::from_counts(SequenceState seq, int n_correct, int k_used) {
  if (k_used <= 0) throw ArgumentError("k_used must be positive");
  if (n_correct < 0 || n_correct > k_used) throw ArgumentError("n_correct out of [0, k]");
  ConfidenceRecord r;
  r.sequence = std::move(seq);
  r.k_used = k_used;
  r.n_correct = n_correct;
  r.raw_conf = static_cast<double>(n_correct) / static_cast<double>(k_used);
  return r;
}

void ConfidenceRecord::validate() const {
  if (k_used <= 0 || n_correct < 0 || n_correct > k_used)
    throw ArgumentError("confidence record counts out of range");
  if (raw_conf != static_cast<double>(n_correct) / static_cast<double>(k_used))
    throw ArgumentError("raw_conf disagrees with n_correct / k_used");
  if (adjusted_conf && (*adjusted_conf < 0.0 || *adjusted_conf > 1.0))
    throw ArgumentError("adjusted_conf outside [0, 1]");
}

std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    while (i < text.size() && is_space(text[i])) ++i;
    while (i < text.size() && !is_space(text[i])) ++i;
    tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string join_continuation(std::string_view prefix, std::string_view continuation) {
  std::string out(prefix);
  if (!prefix.empty() && !continuation.empty() && !is_space(prefix.back()) &&
      !is_space(continuation.front()))
    out += ' ';
  out += continuation;
  return out;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::ispunct(uc)) continue;
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(uc));
  }
  return out;
}

std::vector<std::string> numeric_literals(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    // A literal cannot start in the middle of a word ("x2" is not a number).
    std::size_t start = i;
    bool negative = start > 0 && text[start - 1] == '-' &&
                    (start == 1 || !std::isalnum(static_cast<unsigned char>(text[start - 2])));
    if (start > 0 && std::isalpha(static_cast<unsigned char>(text[start - 1]))) {
      while (i < n && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
      continue;
    }
    std::string int_part;
    while (i < n && is_digit(text[i])) int_part += text[i++];
    // Thousands groups: ",ddd" not followed by another digit.
    while (i + 3 < n && text[i] == ',' && is_digit(text[i + 1]) && is_digit(text[i + 2]) &&
           is_digit(text[i + 3]) && (i + 4 >= n || !is_digit(text[i + 4]))) {
      int_part.append(text.substr(i + 1, 3));
      i += 4;
    }
    std::string frac_part;
    if (i + 1 < n && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < n && is_digit(text[i])) frac_part += text[i++];
    }
    out.push_back(canonical_decimal(negative, int_part, frac_part));
  }
  return out;
}

std::string extract_final_answer(std::string_view text) {
  static constexpr std::string_view kMarker = "answer is";
  std::string low = lower(text);
  auto pos = low.rfind(kMarker);
  if (pos == std::string::npos) return trim(text);
  std::string_view tail = text.substr(pos + kMarker.size());
  auto nl = tail.find('\n');
  if (nl != std::string_view::npos) tail = tail.substr(0, nl);
  std::string out = trim(tail);
  if (!out.empty() && out.front() == ':') out = trim(std::string_view(out).substr(1));
  while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?'))
    out.pop_back();
  return trim(out);
}

bool match_answer(std::string_view candidate, std::string_view gold, MatcherKind kind) {
  if (trim(gold).empty()) throw ConfigError("gold answer is empty");
  if (trim(candidate).empty()) return false;
  switch (kind) {
    case MatcherKind::ExactNormalized:
      return normalize_answer(candidate) == normalize_answer(gold);
    case MatcherKind::NumericFinalAnswer: {
      auto gold_nums = numeric_literals(gold);
      if (gold_nums.empty())
        throw ConfigError("gold answer '" + std::string(gold) + "' has no numeric literal");
      auto cand_nums = numeric_literals(candidate);
      return !cand_nums.empty() && cand_nums.back() == gold_nums.back();
    }
  }
  return false;
}

std::string_view to_string(MatcherKind kind) {
  return kind == MatcherKind::ExactNormalized ? "exact" : "numeric";
}

std::string_view to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::Question: return "question";
    case SequenceKind::QuestionWithPartialAnswer: return "question_with_partial_answer";
    case SequenceKind::QuestionWithAnswer: return "question_with_answer";
  }
  return "question";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

MatcherKind parse_matcher_kind(std::string_view s) {
  if (s == "exact" || s == "exact_normalized") return MatcherKind::ExactNormalized;
  if (s == "numeric" || s == "numeric_final_answer") return MatcherKind::NumericFinalAnswer;
  throw ConfigError("unknown matcher kind '" + std::string(s) + "'");
}

SequenceKind parse_sequence_kind(std::string_view s) {
  if (s == "question") return SequenceKind::Question;
  if (s == "question_with_partial_answer" || s == "partial")
    return SequenceKind::QuestionWithPartialAnswer;
  if (s == "question_with_answer" || s == "answer") return SequenceKind::QuestionWithAnswer;
  throw ConfigError("unknown sequence kind '" + std::string(s) + "'");
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop") return FinishReason::Stop;
  if (s == "length") return FinishReason::Length;
  return FinishReason::Error;
}

}  // namespace finece
