#include "finece/positions.hpp"

#include <cctype>

#include "finece/generator.hpp"

namespace finece {

std::string_view to_string(PositionTrigger t) {
  switch (t) {
    case PositionTrigger::ParagraphEnd: return "paragraph";
    case PositionTrigger::Periodic: return "periodic";
    case PositionTrigger::Entropy: return "entropy";
  }
  return "paragraph";
}

PositionTrigger parse_position_trigger(std::string_view s) {
  if (s == "paragraph" || s == "paragraph_end") return PositionTrigger::ParagraphEnd;
  if (s == "periodic" || s == "fixed_token") return PositionTrigger::Periodic;
  if (s == "entropy") return PositionTrigger::Entropy;
  throw ConfigError("unknown position strategy '" + std::string(s) + "'");
}

void PositionStrategy::validate() const {
  if (trigger == PositionTrigger::Periodic && interval <= 0)
    throw ArgumentError("calibration interval must be >= 1");
}

PositionTracker::PositionTracker(PositionStrategy strategy) : strategy_(strategy) {
  strategy_.validate();
}

void PositionTracker::push(std::vector<CalibrationPosition>& out, CalibrationPosition p) {
  if (last_emitted_ && p.token_offset <= *last_emitted_) return;
  last_emitted_ = p.token_offset;
  out.push_back(p);
}

std::vector<CalibrationPosition> PositionTracker::feed(
    std::string_view token, const std::vector<TokenAlternative>* alternatives) {
  std::vector<CalibrationPosition> out;
  const std::size_t index = tokens_;
  switch (strategy_.trigger) {
    case PositionTrigger::ParagraphEnd:
      for (std::size_t i = 0; i < token.size(); ++i) {
        char c = token[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
          pending_newlines_ += c == '\n';
          continue;
        }
        if (paragraph_open_ && pending_newlines_ >= 2)
          push(out, {content_end_token_, content_end_char_, PositionTrigger::ParagraphEnd});
        pending_newlines_ = 0;
        paragraph_open_ = true;
        content_end_char_ = chars_ + i + 1;
        content_end_token_ = index;
      }
      break;
    case PositionTrigger::Periodic:
      if ((index + 1) % static_cast<std::size_t>(strategy_.interval) == 0)
        push(out, {index, chars_ + token.size(), PositionTrigger::Periodic});
      break;
    case PositionTrigger::Entropy: {
      if (!alternatives)
        throw UnsupportedCapability("entropy positions need top-k logprobs for every token");
      double h = alternatives_entropy(*alternatives);
      if (h > strategy_.entropy_threshold) {
        burst_ = CalibrationPosition{index, chars_ + token.size(), PositionTrigger::Entropy};
      } else if (burst_) {
        push(out, *burst_);
        burst_.reset();
      }
      break;
    }
  }
  chars_ += token.size();
  ++tokens_;
  return out;
}

std::vector<CalibrationPosition> PositionTracker::finish() {
  std::vector<CalibrationPosition> out;
  if (tokens_ == 0) return out;
  if (strategy_.trigger == PositionTrigger::Entropy) {
    if (burst_) push(out, *burst_);
    burst_.reset();
    return out;
  }
  push(out, {tokens_ - 1, chars_, strategy_.trigger});
  return out;
}

namespace {

std::vector<CalibrationPosition> scan(const Completion& completion, const PositionStrategy& s) {
  if (s.trigger == PositionTrigger::Entropy && !completion.top_logprobs)
    throw UnsupportedCapability("completion carries no top logprobs; entropy strategy unavailable");
  std::vector<std::string> local;
  const std::vector<std::string>* tokens = &completion.tokens;
  if (tokens->empty() && !completion.text.empty()) {
    local = whitespace_tokenize(completion.text);
    tokens = &local;
  }
  PositionTracker tracker(s);
  std::vector<CalibrationPosition> out;
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    const std::vector<TokenAlternative>* alts =
        completion.top_logprobs && i < completion.top_logprobs->size()
            ? &(*completion.top_logprobs)[i]
            : nullptr;
    for (const auto& p : tracker.feed((*tokens)[i], alts)) out.push_back(p);
  }
  for (const auto& p : tracker.finish()) out.push_back(p);
  return out;
}

}  // namespace

std::vector<CalibrationPosition> paragraph_positions(const Completion& completion) {
  return scan(completion, {PositionTrigger::ParagraphEnd, 1, 0.0});
}

std::vector<CalibrationPosition> periodic_positions(const Completion& completion, int interval) {
  if (interval <= 0) throw ArgumentError("calibration interval must be >= 1");
  return scan(completion, {PositionTrigger::Periodic, interval, 0.0});
}

std::vector<CalibrationPosition> entropy_positions(const Completion& completion, double threshold) {
  return scan(completion, {PositionTrigger::Entropy, 1, threshold});
}

std::vector<CalibrationPosition> find_positions(const Completion& completion,
                                                const PositionStrategy& strategy) {
  strategy.validate();
  return scan(completion, strategy);
}

double token_ratio(const CalibrationPosition& position, const Completion& completion) {
  std::size_t n = completion.tokens.empty() ? whitespace_tokenize(completion.text).size()
                                            : completion.tokens.size();
  if (n == 0 || position.token_offset >= n)
    throw ArgumentError("position does not belong to the completion");
  return static_cast<double>(position.token_offset + 1) / static_cast<double>(n);
}

}  // namespace finece
