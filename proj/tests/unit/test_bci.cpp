#include <doctest.h>

#include <functional>
#include <map>
#include <random>

#include "finece/bci.hpp"
#include "finece/simulated.hpp"
#include "test_worlds.hpp"

using namespace finece;
using namespace finece::testing;

namespace {

// Fixed continuation tree keyed by prefix text: children "<prefix>/<b>".
struct FixedTree {
  std::map<std::string, double> raw;
  std::map<std::string, int> branching;

  double operator()(const SequenceState& s) const { return raw.at(s.prefix_text); }
  std::vector<SequenceState> operator()(const SequenceState& s, int width) const {
    std::vector<SequenceState> out;
    auto it = branching.find(s.prefix_text);
    int n = it == branching.end() ? width : std::min(width, it->second);
    for (int b = 0; b < n; ++b) {
      std::string child = s.prefix_text + "/" + std::to_string(b);
      if (!raw.count(child)) break;
      out.push_back(SequenceState::partial("q", child, s.position_index + 1));
    }
    return out;
  }
};

BciResult run(const FixedTree& t, const BciParams& p) {
  RawConfidenceFn raw = [&](const SequenceState& s) { return t(s); };
  ContinuationFn cont = [&](const SequenceState& s, int w) { return t(s, w); };
  return integrate(SequenceState::partial("q", "r", 0), raw, cont, p);
}

BciParams bci(double alpha, int w, int d, bool path = false) {
  BciParams p;
  p.alpha = alpha;
  p.width = w;
  p.depth = d;
  p.path_mode = path;
  return p;
}

}  // namespace

TEST_CASE("hand-evaluated examples") {
  FixedTree t;
  t.raw = {{"r", 0.6}, {"r/0", 0.8}, {"r/1", 0.4}};
  CHECK(run(t, bci(0.5, 2, 1)).adjusted == doctest::Approx(0.6).epsilon(1e-15));

  FixedTree path;
  path.raw = {{"r", 0.6}, {"r/0", 0.8}, {"r/0/0", 1.0}};
  auto r = run(path, bci(0.5, 1, 2));
  CHECK(r.adjusted == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r.depth_reached == 2);
  CHECK_FALSE(r.truncated_early);
}

TEST_CASE("identities hold bitwise") {
  FixedTree t;
  t.raw = {{"r", 0.123456789}, {"r/0", 0.9}, {"r/1", 0.1}};
  CHECK(run(t, bci(1.0, 2, 1)).adjusted == 0.123456789);
  CHECK(run(t, bci(0.3, 2, 0)).adjusted == 0.123456789);
  CHECK(run(t, bci(0.3, 0, 2)).adjusted == 0.123456789);
  CHECK(run(t, bci(0.3, 0, 2)).nodes_evaluated == 1);
}

TEST_CASE("fewer branches are averaged and missing depth truncates early") {
  FixedTree t;
  t.raw = {{"r", 0.2}, {"r/0", 1.0}};
  auto r = run(t, bci(0.5, 3, 2));
  // Only one branch, which has no continuation of its own.
  CHECK(r.adjusted == doctest::Approx(0.5 * 0.2 + 0.5 * 1.0));
  CHECK(r.truncated_early);
  CHECK(r.depth_reached == 1);

  FixedTree leaf;
  leaf.raw = {{"r", 0.35}};
  auto l = run(leaf, bci(0.5, 2, 2));
  CHECK(l.adjusted == 0.35);
  CHECK(l.truncated_early);
}

TEST_CASE("adjusted is non-decreasing in a deepest raw and stays in [0, 1]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    FixedTree t;
    t.raw["r"] = u(rng);
    std::vector<std::string> frontier{"r"}, leaves;
    for (int d = 0; d < 2; ++d) {
      std::vector<std::string> next;
      for (const auto& f : frontier)
        for (int b = 0; b < 2; ++b) {
          t.raw[f + "/" + std::to_string(b)] = u(rng);
          next.push_back(f + "/" + std::to_string(b));
        }
      frontier = next;
    }
    double alpha = u(rng);
    double before = run(t, bci(alpha, 2, 2)).adjusted;
    CHECK(before >= 0.0);
    CHECK(before <= 1.0);
    const std::string& leaf = frontier[rng() % frontier.size()];
    t.raw[leaf] = std::min(1.0, t.raw[leaf] + 0.3);
    CHECK(run(t, bci(alpha, 2, 2)).adjusted >= before);
  }
}

TEST_CASE("smaller alpha moves the estimate toward the future mean") {
  FixedTree t;
  t.raw = {{"r", 0.9}, {"r/0", 0.2}, {"r/1", 0.4}};
  const double future = 0.3;
  double last = 1.0;
  for (double alpha : {1.0, 0.8, 0.5, 0.2, 0.0}) {
    double gap = std::abs(run(t, bci(alpha, 2, 1)).adjusted - future);
    CHECK(gap <= last + 1e-15);
    last = gap;
  }
}

TEST_CASE("path mode follows one continuation per starting branch") {
  FixedTree t;
  t.raw = {{"r", 0.5}, {"r/0", 0.6}, {"r/1", 0.2}, {"r/0/0", 1.0}, {"r/0/1", 0.0},
           {"r/1/0", 0.4}, {"r/1/1", 0.0}};
  auto r = run(t, bci(0.5, 2, 2, true));
  double b0 = 0.5 * 0.6 + 0.5 * 1.0, b1 = 0.5 * 0.2 + 0.5 * 0.4;
  CHECK(r.adjusted == doctest::Approx(0.5 * 0.5 + 0.5 * (b0 + b1) / 2));
  auto full = run(t, bci(0.5, 2, 2, false));
  CHECK(full.nodes_evaluated == 7);
  CHECK(r.nodes_evaluated == 5);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(bci(1.5, 1, 1).validate(), ArgumentError);
  CHECK_THROWS_AS(bci(0.5, -1, 1).validate(), ArgumentError);
  CHECK_THROWS_AS(bci(0.5, 1, -1).validate(), ArgumentError);
  CHECK(bci(0.5, 0, 3).trivial());
  CHECK_FALSE(bci(0.5, 1, 1).trivial());
}

TEST_CASE("sampled continuations stop at the next paragraph and reach full answers") {
  SimulatedGenerator gen(flat_world(1.0, 2, 1));
  const auto& q = gen.world().questions[0].question;
  SampledContinuation cont(q, gen, GenerationConfig{}, PositionStrategy{});
  auto level1 = cont(SequenceState::question("q"), 2);
  REQUIRE(level1.size() == 2);
  for (const auto& s : level1) {
    CHECK(s.kind == SequenceKind::QuestionWithPartialAnswer);
    CHECK(count_sentences(s.prefix_text) == 1);
  }
  // Two paragraphs in all, so the next position is the end of the answer.
  auto level2 = cont(level1[0], 1);
  REQUIRE(level2.size() == 1);
  CHECK(level2[0].kind == SequenceKind::QuestionWithAnswer);
  CHECK(count_sentences(level2[0].prefix_text) == 3);
  CHECK(cont(level2[0], 1).empty());
  // Cached: asking again costs nothing.
  auto spent = gen.ledger().inference_count;
  cont(SequenceState::question("q"), 2);
  CHECK(gen.ledger().inference_count == spent);
}

TEST_CASE("Monte-Carlo BCI on the simulator") {
  SimulatedGenerator gen(forked_world());
  const auto& q = gen.world().questions[0].question;
  SamplingPlan plan;
  plan.k = 20;
  CachedMonteCarloConfidence raw(q, gen, plan);
  SampledContinuation cont(q, gen, GenerationConfig{}, PositionStrategy{});
  RawConfidenceFn rf = [&](const SequenceState& s) { return raw(s); };
  ContinuationFn cf = [&](const SequenceState& s, int w) { return cont(s, w); };
  auto seq = SequenceState::partial("q", "We take the good path here.", 1);
  auto r = integrate(seq, rf, cf, bci(0.5, 2, 2));
  CHECK(r.raw == 1.0);
  CHECK(r.adjusted == 1.0);
  auto full = SequenceState::full("q", "We take the bad path here. The answer is 41.", 5);
  CHECK(raw(full) == 0.0);
  CHECK(raw.record(full).k_used == 1);
}
