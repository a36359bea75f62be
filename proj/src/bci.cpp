#include "finece/bci.hpp"

#include <algorithm>

namespace finece {

void BciParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must be in [0, 1]");
  if (width < 0) throw ArgumentError("integration width must be >= 0");
  if (depth < 0) throw ArgumentError("integration depth must be >= 0");
}

namespace {

class Integrator {
 public:
  Integrator(const RawConfidenceFn& raw, const ContinuationFn& cont, const BciParams& p)
      : raw_(raw), cont_(cont), p_(p) {}

  double tree(const SequenceState& seq, int level) {
    double raw = evaluate(seq, level);
    if (level == 0) result.raw = raw;
    if (level == p_.depth) return raw;
    auto children = branches(seq, p_.width);
    if (children.empty()) {
      result.truncated_early = true;
      return raw;
    }
    double sum = 0.0;
    for (const auto& child : children) sum += tree(child, level + 1);
    if (static_cast<int>(children.size()) < p_.width) result.truncated_early = true;
    return blend(raw, sum / static_cast<double>(children.size()));
  }

  double paths(const SequenceState& seq) {
    double raw = evaluate(seq, 0);
    result.raw = raw;
    auto starts = branches(seq, p_.width);
    if (starts.empty()) {
      result.truncated_early = true;
      return raw;
    }
    if (static_cast<int>(starts.size()) < p_.width) result.truncated_early = true;
    double sum = 0.0;
    for (const auto& start : starts) {
      std::vector<double> raws{evaluate(start, 1)};
      SequenceState cur = start;
      for (int level = 2; level <= p_.depth; ++level) {
        auto next = branches(cur, 1);
        if (next.empty()) {
          result.truncated_early = true;
          break;
        }
        cur = next.front();
        raws.push_back(evaluate(cur, level));
      }
      double adj = raws.back();
      for (std::size_t i = raws.size() - 1; i-- > 0;) adj = blend(raws[i], adj);
      sum += adj;
    }
    return blend(raw, sum / static_cast<double>(starts.size()));
  }

  BciResult result;

 private:
  double evaluate(const SequenceState& seq, int level) {
    ++result.nodes_evaluated;
    result.depth_reached = std::max(result.depth_reached, level);
    return raw_(seq);
  }

  std::vector<SequenceState> branches(const SequenceState& seq, int width) {
    auto out = cont_(seq, width);
    if (static_cast<int>(out.size()) > width) out.resize(static_cast<std::size_t>(width));
    return out;
  }

  double blend(double local, double future) const {
    return p_.alpha * local + (1.0 - p_.alpha) * future;
  }

  const RawConfidenceFn& raw_;
  const ContinuationFn& cont_;
  const BciParams& p_;
};

}  // namespace

BciResult integrate(const SequenceState& seq, const RawConfidenceFn& raw_conf,
                    const ContinuationFn& continuation, const BciParams& params) {
  params.validate();
  Integrator in(raw_conf, continuation, params);
  if (params.trivial()) {
    double raw = raw_conf(seq);
    in.result.raw = raw;
    in.result.adjusted = raw;
    in.result.nodes_evaluated = 1;
    return in.result;
  }
  double adjusted = params.path_mode ? in.paths(seq) : in.tree(seq, 0);
  BciResult r = in.result;
  r.adjusted = std::clamp(adjusted, 0.0, 1.0);
  return r;
}

CachedMonteCarloConfidence::CachedMonteCarloConfidence(Question question, Generator& gen,
                                                       SamplingPlan plan)
    : question_(std::move(question)), gen_(gen), plan_(std::move(plan)) {}

const ConfidenceRecord& CachedMonteCarloConfidence::record(const SequenceState& seq) {
  auto key = std::make_pair(static_cast<int>(seq.kind), seq.prefix_text);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ConfidenceRecord rec = seq.kind == SequenceKind::QuestionWithAnswer
                             ? score_full_answer(question_, seq, plan_.matcher)
                             : estimate_confidence(question_, seq, plan_, gen_).record;
  return cache_.emplace(std::move(key), std::move(rec)).first->second;
}

double CachedMonteCarloConfidence::operator()(const SequenceState& seq) {
  return record(seq).raw_conf;
}

SampledContinuation::SampledContinuation(Question question, Generator& gen,
                                         GenerationConfig config, PositionStrategy strategy)
    : question_(std::move(question)), gen_(gen), config_(config), strategy_(strategy) {
  strategy_.validate();
  if (strategy_.trigger == PositionTrigger::Entropy) {
    config_.request_logprobs = true;
    config_.top_logprobs_k = std::max(config_.top_logprobs_k, 5);
  }
}

std::vector<SequenceState> SampledContinuation::operator()(const SequenceState& seq, int width) {
  if (width <= 0 || seq.kind == SequenceKind::QuestionWithAnswer) return {};
  auto key = std::make_pair(seq.prefix_text, width);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  GenerationConfig cfg = config_;
  cfg.n = width;
  auto completions = gen_.generate(make_prompt(question_, seq), cfg);
  std::vector<SequenceState> out;
  for (const auto& c : completions) {
    if (trim(c.text).empty()) continue;
    auto positions = find_positions(c, strategy_);
    bool to_end = positions.empty() || positions.front().token_offset + 1 >= c.tokens.size();
    if (to_end) {
      std::string full = join_continuation(seq.prefix_text, c.text);
      if (c.finish_reason == FinishReason::Stop)
        out.push_back(SequenceState::full(question_.id, std::move(full), seq.position_index + 1));
      else
        out.push_back(SequenceState::partial(question_.id, std::move(full), seq.position_index + 1));
      continue;
    }
    std::string cut = c.text.substr(0, positions.front().char_offset);
    out.push_back(SequenceState::partial(question_.id, join_continuation(seq.prefix_text, cut),
                                         seq.position_index + 1));
  }
  cache_.emplace(std::move(key), out);
  return out;
}

}  // namespace finece
