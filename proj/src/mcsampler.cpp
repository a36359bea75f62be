#include "finece/mcsampler.hpp"

#include <algorithm>

namespace finece {

void SamplingPlan::validate() const {
  if (k <= 0) throw ArgumentError("sample count k must be >= 1");
  if (batch_size < 0) throw ArgumentError("batch_size must be >= 0");
  GenerationConfig probe = config;
  probe.n = std::min(k, batch_size == 0 ? k : batch_size);
  probe.validate();
}

Prompt make_prompt(const Question& q, const SequenceState& seq) {
  return Prompt{q.id, q.text, seq.prefix_text};
}

bool answer_is_correct(const Question& q, std::string_view full_answer, MatcherKind kind) {
  return match_answer(extract_final_answer(full_answer), q.gold_answer, kind);
}

ConfidenceEstimate estimate_confidence(const Question& question, const SequenceState& seq,
                                       const SamplingPlan& plan, Generator& gen) {
  plan.validate();
  seq.validate();
  if (seq.question_id != question.id)
    throw ArgumentError("sequence belongs to '" + seq.question_id + "', not '" + question.id + "'");
  const MatcherKind kind = plan.matcher.value_or(question.matcher_kind);
  const Prompt prompt = make_prompt(question, seq);
  const int batch = plan.batch_size == 0 ? plan.k : std::min(plan.batch_size, plan.k);

  ConfidenceEstimate est;
  est.completions.reserve(static_cast<std::size_t>(plan.k));
  while (static_cast<int>(est.completions.size()) < plan.k) {
    GenerationConfig cfg = plan.config;
    cfg.n = std::min(batch, plan.k - static_cast<int>(est.completions.size()));
    try {
      auto got = gen.generate(prompt, cfg);
      for (auto& c : got) est.completions.push_back(std::move(c));
    } catch (const TransportError& e) {
      throw PartialResultError("sampling failed after " + std::to_string(e.attempts()) +
                                   " attempts with " + std::to_string(est.completions.size()) +
                                   " of " + std::to_string(plan.k) + " samples: " + e.what(),
                               std::move(est.completions));
    }
  }

  int n_correct = 0;
  for (const auto& c : est.completions) {
    std::string full = join_continuation(seq.prefix_text, c.text);
    bool ok = answer_is_correct(question, full, kind);
    n_correct += ok ? 1 : 0;
    est.correct.push_back(ok);
    est.full_answers.push_back(std::move(full));
  }
  est.record = ConfidenceRecord::from_counts(seq, n_correct, plan.k);
  return est;
}

ConfidenceRecord score_full_answer(const Question& question, const SequenceState& seq,
                                   std::optional<MatcherKind> matcher) {
  if (seq.kind != SequenceKind::QuestionWithAnswer)
    throw ArgumentError("score_full_answer needs a sequence holding a complete answer");
  const MatcherKind kind = matcher.value_or(question.matcher_kind);
  bool ok = answer_is_correct(question, seq.prefix_text, kind);
  auto rec = ConfidenceRecord::from_counts(seq, ok ? 1 : 0, 1);
  rec.is_final_correct = ok;
  return rec;
}

}  // namespace finece
