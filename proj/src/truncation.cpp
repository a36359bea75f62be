#include <cctype>
#include <cmath>

#include "finece/pipeline.hpp"

namespace finece {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool has_content(std::string_view text, std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i)
    if (!is_space(text[i])) return true;
  return false;
}

// Cut position (exclusive) if a sentence ends at char offset `end`, ignoring
// whitespace carried at the end of the token.
std::optional<std::size_t> sentence_cut(std::string_view text, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && is_space(text[b - 1])) --b;
  if (b == 0 || b >= text.size()) return std::nullopt;
  char last = text[b - 1];
  bool terminator = (last == '.' || last == '!' || last == '?') && is_space(text[b]);
  bool newline = text[b] == '\n';
  if (!terminator && !newline) return std::nullopt;
  if (!has_content(text, b)) return std::nullopt;
  return b;
}

std::string truncate_sentences(const Completion& answer, int level, int T) {
  std::vector<std::string> local;
  const std::vector<std::string>* tokens = &answer.tokens;
  if (tokens->empty()) {
    local = whitespace_tokenize(answer.text);
    tokens = &local;
  }
  const std::size_t n = tokens->size();
  std::size_t target = static_cast<std::size_t>(
      std::llround(static_cast<double>(level) * static_cast<double>(n) / (T + 1.0)));
  if (target < 1) target = 1;
  std::size_t end = 0;
  for (std::size_t i = 0; i < n; ++i) {
    end += (*tokens)[i].size();
    if (i + 1 < target) continue;
    if (auto cut = sentence_cut(answer.text, std::min(end, answer.text.size())))
      return answer.text.substr(0, *cut);
  }
  throw TruncationInfeasible("no sentence boundary after token " + std::to_string(target) +
                             " leaves text to continue");
}

std::string truncate_paragraphs(const Completion& answer, int level) {
  const std::string& text = answer.text;
  int seen = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    // Paragraph content runs until a whitespace stretch holding two newlines.
    std::size_t content_end = i;
    while (i < text.size()) {
      if (!is_space(text[i])) {
        content_end = ++i;
        continue;
      }
      std::size_t j = i;
      int newlines = 0;
      while (j < text.size() && is_space(text[j])) newlines += text[j++] == '\n';
      if (newlines >= 2 || j >= text.size()) {
        i = j;
        break;
      }
      i = j;
    }
    if (++seen == level) {
      if (!has_content(text, content_end))
        throw TruncationInfeasible("answer has only " + std::to_string(seen) + " paragraph(s)");
      return text.substr(0, content_end);
    }
  }
  throw TruncationInfeasible("answer has only " + std::to_string(seen) + " paragraph(s)");
}

}  // namespace

std::string truncate(const Completion& answer, TruncationRule rule, int level, int T) {
  if (trim(answer.text).empty()) throw ArgumentError("cannot truncate an empty answer");
  if (T < 1 || level < 1 || level > T) throw ArgumentError("truncation level must be in [1, T]");
  return rule == TruncationRule::SentenceFraction ? truncate_sentences(answer, level, T)
                                                  : truncate_paragraphs(answer, level);
}

}  // namespace finece
