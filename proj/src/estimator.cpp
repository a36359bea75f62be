#include "finece/estimator.hpp"

#include <algorithm>

namespace finece {

namespace {

class Scorer {
 public:
  Scorer(const Question& q, Generator& gen, const EstimateOptions& opt)
      : opt_(opt), raw_(q, gen, opt.plan), cont_(q, gen, opt.plan.config, opt.positions) {}

  PositionRecord score(const SequenceState& seq) {
    PositionRecord pr;
    pr.record = raw_.record(seq);
    if (seq.kind != SequenceKind::QuestionWithAnswer && !opt_.bci.trivial()) {
      RawConfidenceFn rf = [this](const SequenceState& s) { return raw_(s); };
      ContinuationFn cf = [this](const SequenceState& s, int w) { return cont_(s, w); };
      BciResult r = integrate(seq, rf, cf, opt_.bci);
      pr.record.adjusted_conf = r.adjusted;
      pr.bci = r;
    }
    return pr;
  }

 private:
  const EstimateOptions& opt_;
  CachedMonteCarloConfidence raw_;
  SampledContinuation cont_;
};

void check_options(const EstimateOptions& opt) {
  opt.plan.validate();
  opt.positions.validate();
  opt.bci.validate();
}

}  // namespace

PositionRecord estimate_sequence(const Question& question, const SequenceState& seq,
                                 Generator& gen, const EstimateOptions& options) {
  check_options(options);
  seq.validate();
  Scorer scorer(question, gen, options);
  PositionRecord pr = scorer.score(seq);
  if (seq.kind == SequenceKind::QuestionWithAnswer) {
    pr.token_ratio = 1.0;
    pr.tag = PositionTag::Final;
  }
  return pr;
}

AnswerEstimate estimate_along_answer(const Question& question, const SequenceState& start,
                                     Generator& gen, const EstimateOptions& options,
                                     const RecordSink& on_record) {
  check_options(options);
  start.validate();
  if (start.kind == SequenceKind::QuestionWithAnswer)
    throw ArgumentError("the sequence already holds a complete answer");

  GenerationConfig cfg = options.answer_config;
  cfg.n = 1;
  if (options.positions.trigger == PositionTrigger::Entropy) {
    cfg.request_logprobs = true;
    cfg.top_logprobs_k = std::max(cfg.top_logprobs_k, 5);
  }

  Scorer scorer(question, gen, options);
  PositionTracker tracker(options.positions);
  AnswerEstimate out;
  std::string text;
  std::optional<CalibrationPosition> pending;

  auto record_at = [&](const CalibrationPosition& p, std::size_t produced, bool complete) {
    const int index = start.position_index + static_cast<int>(out.records.size()) + 1;
    SequenceState seq =
        complete ? SequenceState::full(question.id, join_continuation(start.prefix_text, text), index)
                 : SequenceState::partial(
                       question.id,
                       join_continuation(start.prefix_text, std::string_view(text).substr(0, p.char_offset)),
                       index);
    PositionRecord pr = scorer.score(seq);
    pr.position = p;
    pr.tokens_generated = produced;
    out.records.push_back(pr);
    if (on_record) on_record(out.records.back());
  };

  // A position is scored once the next token shows it is not the end of the
  // answer; the end itself is only known after generation stops.
  Completion answer = gen.stream(make_prompt(question, start), cfg, [&](const StreamedToken& t) {
    if (pending) {
      record_at(*pending, t.index, false);
      pending.reset();
    }
    text += t.token;
    for (const auto& p : tracker.feed(t.token, t.alternatives)) {
      if (pending) record_at(*pending, t.index + 1, false);
      pending = p;
    }
    return true;
  });

  text = answer.text;
  const std::size_t n = answer.tokens.size();
  const bool stopped = answer.finish_reason == FinishReason::Stop;
  std::vector<CalibrationPosition> tail;
  if (pending) tail.push_back(*pending);
  for (const auto& p : tracker.finish()) tail.push_back(p);
  for (const auto& p : tail) record_at(p, n, stopped && p.token_offset + 1 == n);

  out.final_correct =
      stopped && answer_is_correct(question, join_continuation(start.prefix_text, answer.text),
                                   options.plan.matcher.value_or(question.matcher_kind));
  const std::size_t z = out.records.size();
  for (std::size_t i = 0; i < z; ++i) {
    auto& r = out.records[i];
    r.token_ratio = token_ratio(*r.position, answer);
    r.record.is_final_correct = out.final_correct;
    if (i + 1 == z)
      r.tag = PositionTag::Final;
    else if (i == 0)
      r.tag = PositionTag::P1;
    else if (i + 2 == z)
      r.tag = PositionTag::PzMinus1;
  }
  out.answer = std::move(answer);
  return out;
}

}  // namespace finece
