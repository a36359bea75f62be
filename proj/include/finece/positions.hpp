#pragma once

// Where in a generated answer to estimate confidence.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finece/core.hpp"

namespace finece {

enum class PositionTrigger { ParagraphEnd, Periodic, Entropy };
std::string_view to_string(PositionTrigger t);
PositionTrigger parse_position_trigger(std::string_view s);

struct CalibrationPosition {
  std::size_t token_offset = 0;  // last token included
  std::size_t char_offset = 0;   // end of the included text (exclusive)
  PositionTrigger trigger = PositionTrigger::ParagraphEnd;

  friend bool operator==(const CalibrationPosition&, const CalibrationPosition&) = default;
};

struct PositionStrategy {
  PositionTrigger trigger = PositionTrigger::ParagraphEnd;
  int interval = 30;
  double entropy_threshold = 1e-10;

  void validate() const;
};

// Incremental detector: feed tokens as they are generated and receive each
// position as soon as it is certain. Paragraph ends are reported when the next
// paragraph starts; entropy bursts when the burst ends.
class PositionTracker {
 public:
  explicit PositionTracker(PositionStrategy strategy);

  std::vector<CalibrationPosition> feed(std::string_view token,
                                        const std::vector<TokenAlternative>* alternatives = nullptr);
  // Flushes pending positions; paragraph and periodic strategies add end-of-text.
  std::vector<CalibrationPosition> finish();

  std::size_t tokens_seen() const noexcept { return tokens_; }

 private:
  void push(std::vector<CalibrationPosition>& out, CalibrationPosition p);

  PositionStrategy strategy_;
  std::size_t tokens_ = 0;
  std::size_t chars_ = 0;
  std::optional<std::size_t> last_emitted_;
  // paragraph state
  std::size_t content_end_char_ = 0;
  std::size_t content_end_token_ = 0;
  int pending_newlines_ = 0;
  bool paragraph_open_ = false;
  // entropy state
  std::optional<CalibrationPosition> burst_;
};

std::vector<CalibrationPosition> paragraph_positions(const Completion& completion);
std::vector<CalibrationPosition> periodic_positions(const Completion& completion, int interval);
std::vector<CalibrationPosition> entropy_positions(const Completion& completion, double threshold);
std::vector<CalibrationPosition> find_positions(const Completion& completion,
                                                const PositionStrategy& strategy);

// Share of the completion's tokens up to and including the position.
double token_ratio(const CalibrationPosition& position, const Completion& completion);

}  // namespace finece
