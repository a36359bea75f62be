#include <doctest.h>

#include <cmath>

#include "finece/mcsampler.hpp"
#include "finece/simulated.hpp"
#include "test_worlds.hpp"

using namespace finece;
using namespace finece::testing;

TEST_CASE("k = 10 with 7 matching continuations gives 0.7") {
  ScriptedGenerator gen({"The answer is 42.", "The answer is 42.", "The answer is 7.",
                         "The answer is 42.", "The answer is 42.", "No idea.",
                         "The answer is 42.", "The answer is 42.", "The answer is 40.",
                         "The answer is 42."});
  SamplingPlan plan;
  plan.k = 10;
  auto est = estimate_confidence(numeric_question("q", "42"), SequenceState::question("q"), plan, gen);
  CHECK(est.record.raw_conf == 0.7);
  CHECK(est.record.n_correct == 7);
  CHECK(est.record.k_used == 10);
  CHECK(est.completions.size() == 10);
  CHECK(gen.ledger().inference_count == 10);
}

TEST_CASE("the full reconstructed answer is matched, not the continuation alone") {
  ScriptedGenerator gen({" 42."});
  SamplingPlan plan;
  plan.k = 3;
  auto seq = SequenceState::partial("q", "Adding it all up, the answer is", 1);
  auto est = estimate_confidence(numeric_question("q", "42"), seq, plan, gen);
  CHECK(est.record.raw_conf == 1.0);
  CHECK(est.full_answers.front() == "Adding it all up, the answer is 42.");
}

TEST_CASE("degenerate simulated world gives zero") {
  SimulatedGenerator gen(flat_world(0.0));
  SamplingPlan plan;
  auto est = estimate_confidence(gen.world().questions[0].question, SequenceState::question("q"),
                                 plan, gen);
  CHECK(plan.k == 30);
  CHECK(est.record.raw_conf == 0.0);
}

TEST_CASE("p = 0.6 world with k = 1000 lands in [0.55, 0.65]") {
  SimulatedGenerator gen(flat_world(0.6, 2));
  SamplingPlan plan;
  plan.k = 1000;
  auto est = estimate_confidence(gen.world().questions[0].question, SequenceState::question("q"),
                                 plan, gen);
  CHECK(est.record.raw_conf >= 0.55);
  CHECK(est.record.raw_conf <= 0.65);
}

TEST_CASE("raw confidence is a multiple of 1/k and batching preserves the count") {
  SimulatedGenerator gen(flat_world(0.5, 2));
  for (int k : {1, 3, 7, 30}) {
    for (int batch : {0, 1, 4}) {
      SamplingPlan plan;
      plan.k = k;
      plan.batch_size = batch;
      auto before = gen.ledger().inference_count;
      auto est = estimate_confidence(gen.world().questions[0].question,
                                     SequenceState::question("q"), plan, gen);
      CHECK(gen.ledger().inference_count - before == static_cast<std::uint64_t>(k));
      double scaled = est.record.raw_conf * k;
      CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
      CHECK(est.record.raw_conf == static_cast<double>(est.record.n_correct) / k);
    }
  }
}

TEST_CASE("monotone consistency between certain and hopeless prefixes") {
  SimulatedGenerator gen(forked_world());
  const auto& q = gen.world().questions[0].question;
  for (int k : {1, 2, 10}) {
    SamplingPlan plan;
    plan.k = k;
    auto good = estimate_confidence(q, SequenceState::partial("q", "We take the good path here.", 1),
                                    plan, gen);
    auto bad = estimate_confidence(q, SequenceState::partial("q", "We take the bad path here.", 1),
                                   plan, gen);
    CHECK(good.record.raw_conf == 1.0);
    CHECK(bad.record.raw_conf == 0.0);
  }
}

TEST_CASE("k = 0 is rejected") {
  ScriptedGenerator gen({"x"});
  SamplingPlan plan;
  plan.k = 0;
  CHECK_THROWS_AS(
      estimate_confidence(numeric_question("q", "1"), SequenceState::question("q"), plan, gen),
      ArgumentError);
}

TEST_CASE("transport failure surfaces the samples gathered so far") {
  ScriptedGenerator gen({"The answer is 1."}, 2);
  SamplingPlan plan;
  plan.k = 10;
  plan.batch_size = 3;
  try {
    estimate_confidence(numeric_question("q", "1"), SequenceState::question("q"), plan, gen);
    FAIL("expected a partial result");
  } catch (const PartialResultError& e) {
    CHECK(e.gathered().size() == 6);
  }
}

TEST_CASE("score_full_answer examples") {
  auto q = numeric_question("q", "42");
  auto hit = score_full_answer(q, SequenceState::full("q", "Work. The answer is 42.", 2));
  CHECK(hit.raw_conf == 1.0);
  CHECK(hit.k_used == 1);
  CHECK(hit.is_final_correct == true);
  auto miss = score_full_answer(q, SequenceState::full("q", "Work. The answer is 41.", 2));
  CHECK(miss.raw_conf == 0.0);
  CHECK(miss.is_final_correct == false);
  auto empty = SequenceState::full("q", "x", 1);
  empty.prefix_text = " ";
  CHECK(score_full_answer(q, empty).raw_conf == 0.0);
  CHECK_THROWS_AS(score_full_answer(q, SequenceState::partial("q", "Work.", 1)), ArgumentError);
}

TEST_CASE("sequence from another question is rejected") {
  ScriptedGenerator gen({"x"});
  CHECK_THROWS_AS(estimate_confidence(numeric_question("q", "1"), SequenceState::question("other"),
                                      SamplingPlan{}, gen),
                  ArgumentError);
}
