#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "finece/pipeline.hpp"
#include "finece/simulated.hpp"
#include "test_worlds.hpp"

using namespace finece;
using namespace finece::testing;

namespace {

PipelineParams params(int k, int m, int T, TreeStrategy s,
                      TruncationRule r = TruncationRule::SentenceFraction) {
  PipelineParams p;
  p.k = k;
  p.m = m;
  p.T = T;
  p.strategy = s;
  p.truncation_rule = r;
  return p;
}

// Node count per level by walking the expansion pattern.
std::uint64_t enumerate_cost(const PipelineParams& p) {
  std::uint64_t nodes = 1, level_nodes = 1;
  for (int level = 1; level <= p.T; ++level) {
    if (p.strategy == TreeStrategy::FullTree)
      level_nodes *= static_cast<std::uint64_t>(p.k);
    else if (p.strategy == TreeStrategy::Clustered || level == 1)
      level_nodes *= static_cast<std::uint64_t>(p.m);
    nodes += level_nodes;
  }
  return nodes * static_cast<std::uint64_t>(p.k);
}

SimulatedWorld long_world(double p = 0.5, std::uint64_t seed = 21) {
  return flat_world(p, 12, 2, seed);
}

}  // namespace

TEST_CASE("sentence fraction truncation cuts at the midpoint sentence") {
  auto c = completion_of("A b c. D e f. G h i. J k l.");
  CHECK(truncate(c, TruncationRule::SentenceFraction, 1, 1) == "A b c. D e f.");
  CHECK(truncate(c, TruncationRule::SentenceFraction, 1, 3) == "A b c.");
  CHECK(truncate(c, TruncationRule::SentenceFraction, 2, 3) == "A b c. D e f.");
  CHECK(truncate(c, TruncationRule::SentenceFraction, 3, 3) == "A b c. D e f. G h i.");
}

TEST_CASE("sentence cut snaps forward to the next boundary") {
  // 10 tokens, T = 1 -> 5 tokens, which ends mid-sentence.
  auto c = completion_of("One two three four five six. Seven eight nine ten.");
  CHECK(truncate(c, TruncationRule::SentenceFraction, 1, 1) == "One two three four five six.");
  // Newlines also end a sentence.
  auto lines = completion_of("alpha beta\ngamma delta");
  CHECK(truncate(lines, TruncationRule::SentenceFraction, 1, 1) == "alpha beta");
}

TEST_CASE("paragraph truncation returns whole paragraphs") {
  auto c = completion_of("First part.\n\nSecond part here.\n\nThird.");
  CHECK(truncate(c, TruncationRule::ParagraphBoundary, 1, 2) == "First part.");
  CHECK(truncate(c, TruncationRule::ParagraphBoundary, 2, 2) == "First part.\n\nSecond part here.");
  auto single_newlines = completion_of("Line one.\nLine two.\n\nNext.");
  CHECK(truncate(single_newlines, TruncationRule::ParagraphBoundary, 1, 1) ==
        "Line one.\nLine two.");
}

TEST_CASE("one-sentence and one-paragraph answers are infeasible") {
  auto c = completion_of("The answer is 42.");
  CHECK_THROWS_AS(truncate(c, TruncationRule::SentenceFraction, 1, 1), TruncationInfeasible);
  CHECK_THROWS_AS(truncate(c, TruncationRule::ParagraphBoundary, 1, 1), TruncationInfeasible);
  auto two = completion_of("A. B.\n\nC.");
  CHECK_THROWS_AS(truncate(two, TruncationRule::ParagraphBoundary, 2, 2), TruncationInfeasible);
  CHECK_THROWS_AS(truncate(c, TruncationRule::SentenceFraction, 2, 1), ArgumentError);
  CHECK_THROWS_AS(truncate(c, TruncationRule::SentenceFraction, 0, 1), ArgumentError);
  CHECK_THROWS_AS(truncate(completion_of("  "), TruncationRule::SentenceFraction, 1, 1),
                  ArgumentError);
}

TEST_CASE("truncations are strict non-empty prefixes and grow with the level") {
  SimulatedGenerator gen(long_world());
  GenerationConfig cfg;
  cfg.n = 20;
  const auto& q = gen.world().questions[0].question;
  for (const auto& c : gen.generate({q.id, q.text, ""}, cfg)) {
    for (auto rule : {TruncationRule::SentenceFraction, TruncationRule::ParagraphBoundary}) {
      std::size_t last = 0;
      for (int level = 1; level <= 3; ++level) {
        std::string cut = truncate(c, rule, level, 3);
        CHECK(!trim(cut).empty());
        CHECK(cut.size() < c.text.size());
        CHECK(c.text.compare(0, cut.size(), cut) == 0);
        CHECK(cut.size() > last);
        last = cut.size();
      }
    }
  }
}

TEST_CASE("hashed trigram embedding") {
  HashedTrigramEmbedder e;
  auto v = e.embed("ABCD");
  double norm = 0.0;
  int nonzero = 0;
  for (double x : v) {
    norm += x * x;
    nonzero += x != 0.0;
  }
  CHECK(norm == doctest::Approx(1.0));
  CHECK(nonzero == 2);
  CHECK(cosine_distance(e.embed("abcd"), e.embed("ABCD")) == 0.0);
  CHECK(cosine_distance(e.embed("abc"), e.embed("xyz")) == doctest::Approx(1.0));
  CHECK(e.embed("ab").size() == 1024);
}

TEST_CASE("identical fragments collapse to one cluster") {
  std::vector<std::string> frags(6, "same fragment text");
  auto r = cluster_fragments(frags, 2);
  CHECK(r.effective_m == 1);
  CHECK(r.requested_m == 2);
  REQUIRE(r.clusters.size() == 1);
  CHECK(r.clusters[0].members.size() == 6);
  CHECK(frags[r.clusters[0].medoid] == "same fragment text");
}

TEST_CASE("clustering matches the exhaustive best 2-partition") {
  const auto& emb = default_embedder();
  auto check = [&](const std::vector<std::string>& frags) {
    const std::size_t n = frags.size();
    std::vector<Embedding> v;
    for (const auto& f : frags) v.push_back(emb.embed(f));
    auto group_cost = [&](const std::vector<std::size_t>& g) {
      double best = std::numeric_limits<double>::infinity();
      for (auto c : g) {
        double s = 0.0;
        for (auto x : g) s += cosine_distance(v[x], v[c]);
        best = std::min(best, s);
      }
      return best;
    };
    double best_cost = std::numeric_limits<double>::infinity();
    std::set<std::size_t> best_side;
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      if (mask & 1u) continue;  // fix element 0 on the "0" side
      std::vector<std::size_t> a, b;
      for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? b : a).push_back(i);
      double c = group_cost(a) + group_cost(b);
      if (c < best_cost - 1e-12) {
        best_cost = c;
        best_side = std::set<std::size_t>(a.begin(), a.end());
      }
    }
    auto r = cluster_fragments(frags, 2);
    REQUIRE(r.clusters.size() == 2);
    std::set<std::size_t> got0(r.clusters[0].members.begin(), r.clusters[0].members.end());
    std::set<std::size_t> got1(r.clusters[1].members.begin(), r.clusters[1].members.end());
    CHECK((got0 == best_side || got1 == best_side));
  };
  check({"aaaa", "aaab", "zzzz", "zzzy"});
  check({"we add the apples", "we add the apple", "subtract the coins", "subtract all coins",
         "subtract the coin"});
  check({"first total is 10", "first total is 12", "first total is 14", "rough guess near 90",
         "rough guess near 95"});
}

TEST_CASE("m equal to the fragment count yields singletons") {
  std::vector<std::string> frags{"alpha one", "beta two", "gamma three"};
  auto r = cluster_fragments(frags, 3);
  REQUIRE(r.clusters.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(r.clusters[c].members == std::vector<std::size_t>{c});
    CHECK(r.clusters[c].medoid == c);
  }
  CHECK_THROWS_AS(cluster_fragments(frags, 0), ArgumentError);
  CHECK_THROWS_AS(cluster_fragments({}, 1), ArgumentError);
}

TEST_CASE("clustering partitions every fragment and is deterministic") {
  SimulatedGenerator gen(long_world());
  GenerationConfig cfg;
  cfg.n = 30;
  const auto& q = gen.world().questions[0].question;
  std::vector<std::string> frags;
  for (const auto& c : gen.generate({q.id, q.text, ""}, cfg))
    frags.push_back(truncate(c, TruncationRule::SentenceFraction, 1, 2));
  for (int m : {1, 2, 3, 5}) {
    auto a = cluster_fragments(frags, m);
    auto b = cluster_fragments(frags, m);
    std::vector<int> owner(frags.size(), 0);
    for (const auto& cl : a.clusters) {
      CHECK(std::find(cl.members.begin(), cl.members.end(), cl.medoid) != cl.members.end());
      for (auto i : cl.members) ++owner[i];
    }
    for (int o : owner) CHECK(o == 1);
    REQUIRE(a.clusters.size() == b.clusters.size());
    for (std::size_t c = 0; c < a.clusters.size(); ++c) {
      CHECK(a.clusters[c].members == b.clusters[c].members);
      CHECK(a.clusters[c].medoid == b.clusters[c].medoid);
    }
  }
}

TEST_CASE("select_representative examples") {
  auto one = std::vector<Completion>{completion_of("only")};
  CHECK(&select_representative(one) == &one[0]);
  std::vector<std::string> majority{"text B is here", "text A", "text A", "text A"};
  CHECK(select_representative(majority) == 1);
  std::vector<std::string> near{"the total is 120 apples", "the total is 121 apples",
                                "zebra crossing xylophone"};
  CHECK(select_representative(near) == 0);
}

TEST_CASE("select_representative agrees with brute-force distance sums") {
  const auto& emb = default_embedder();
  std::mt19937 rng(9);
  const std::vector<std::string> words{"add", "the", "apples", "sum", "coins", "total", "is", "ten"};
  for (int t = 0; t < 100; ++t) {
    std::vector<std::string> texts(2 + rng() % 6);
    for (auto& s : texts)
      for (int w = 0; w < 4; ++w) s += words[rng() % words.size()] + " ";
    std::size_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < texts.size(); ++j)
        sum += cosine_distance(emb.embed(texts[i]), emb.embed(texts[j]));
      if (sum < best_sum - 1e-12) {
        best_sum = sum;
        best = i;
      }
    }
    CHECK(select_representative(texts) == best);
  }
}

TEST_CASE("predicted cost examples") {
  CHECK(predicted_cost(params(3, 2, 2, TreeStrategy::FullTree)) == 39);
  CHECK(predicted_cost(params(3, 2, 2, TreeStrategy::Clustered)) == 21);
  CHECK(predicted_cost(params(3, 2, 2, TreeStrategy::Linear)) == 15);
  CHECK(predicted_cost(params(30, 1, 0, TreeStrategy::Linear)) == 30);
  CHECK(predicted_cost(params(30, 3, 3, TreeStrategy::Linear)) == 300);
  CHECK(predicted_cost(params(30, 2, 2, TreeStrategy::Linear)) == 150);
  CHECK_THROWS_AS(predicted_cost(params(2, 3, 1, TreeStrategy::Linear)), ArgumentError);
  CHECK_THROWS_AS(predicted_cost(params(1000, 2, 10, TreeStrategy::FullTree)), ArgumentError);
}

TEST_CASE("predicted cost matches node enumeration and orders the strategies") {
  for (int k = 1; k <= 6; ++k)
    for (int m = 1; m <= k; ++m)
      for (int T = 0; T <= 4; ++T) {
        auto full = predicted_cost(params(k, m, T, TreeStrategy::FullTree));
        auto clus = predicted_cost(params(k, m, T, TreeStrategy::Clustered));
        auto lin = predicted_cost(params(k, m, T, TreeStrategy::Linear));
        CHECK(full == enumerate_cost(params(k, m, T, TreeStrategy::FullTree)));
        CHECK(clus == enumerate_cost(params(k, m, T, TreeStrategy::Clustered)));
        CHECK(lin == enumerate_cost(params(k, m, T, TreeStrategy::Linear)));
        CHECK(lin <= clus);
        CHECK(clus <= full);
        CHECK((clus == full) == (m == k || T == 0));
        CHECK((lin == clus) == (T <= 1 || m == 1));
      }
}

TEST_CASE("build_tree spends exactly the predicted inferences") {
  auto w = long_world();
  const auto& q = w.questions[0].question;
  SamplingPlan plan;
  for (auto [strategy, expect] : {std::pair{TreeStrategy::FullTree, 39},
                                  std::pair{TreeStrategy::Clustered, 21},
                                  std::pair{TreeStrategy::Linear, 15}}) {
    SimulatedGenerator gen(w);
    auto tree = build_tree(q, params(3, 2, 2, strategy), plan, gen);
    CHECK(tree.ledger.inference_count == static_cast<std::uint64_t>(expect));
    CHECK(tree.predicted_cost == static_cast<std::uint64_t>(expect));
    CHECK(tree.cost_check == CostCheck::Pass);
    CHECK(gen.ledger() == tree.ledger);
  }
}

TEST_CASE("tree structure invariants") {
  auto w = long_world(0.6, 5);
  const auto& q = w.questions[0].question;
  for (auto strategy : {TreeStrategy::FullTree, TreeStrategy::Clustered, TreeStrategy::Linear})
    for (auto rule : {TruncationRule::SentenceFraction, TruncationRule::ParagraphBoundary}) {
      SimulatedGenerator gen(w);
      auto tree = build_tree(q, params(3, 2, 3, strategy, rule), SamplingPlan{}, gen);
      CHECK(tree.cost_check == CostCheck::Pass);
      CHECK(tree.root().prefix.kind == SequenceKind::Question);
      for (const auto& node : tree.nodes) {
        CHECK(node.depth <= 3);
        if (node.depth > 0) {
          CHECK(node.prefix.kind == SequenceKind::QuestionWithPartialAnswer);
          const auto& parent = tree.nodes[static_cast<std::size_t>(*node.parent)];
          CHECK(node.depth == parent.depth + 1);
          const auto& pp = parent.prefix.prefix_text;
          CHECK(node.prefix.prefix_text.size() > pp.size());
          CHECK(node.prefix.prefix_text.compare(0, pp.size(), pp) == 0);
        }
        // Re-derive the label from the stored samples.
        int hits = 0;
        for (int s : node.samples) hits += tree.samples[static_cast<std::size_t>(s)].correct;
        CHECK(node.samples.size() == 3);
        CHECK(node.record.raw_conf == static_cast<double>(hits) / 3.0);
      }
      std::size_t leaves_at_T = 0;
      for (const auto& node : tree.nodes) leaves_at_T += node.depth == 3;
      if (strategy == TreeStrategy::FullTree) CHECK(leaves_at_T == 27);
      if (strategy == TreeStrategy::Clustered) CHECK(leaves_at_T == 8);
      if (strategy == TreeStrategy::Linear) CHECK(leaves_at_T == 2);
    }
}

TEST_CASE("infeasible truncation turns nodes into leaves and skips the cost check") {
  SimulatedGenerator gen(flat_world(0.5, 0));
  const auto& q = gen.world().questions[0].question;
  auto tree = build_tree(q, params(3, 2, 2, TreeStrategy::Linear), SamplingPlan{}, gen);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.ledger.inference_count == 3);
  CHECK(tree.cost_check == CostCheck::Skipped);
  CHECK(!tree.notes.empty());
}

TEST_CASE("lowered m is recorded and skips the cost check") {
  SimulatedWorld w = flat_world(0.5, 4, 1);
  w.questions[0].rules[0].fragments = {{"We count everything twice.", 1.0}};
  SimulatedGenerator gen(w);
  auto tree = build_tree(w.questions[0].question, params(4, 3, 1, TreeStrategy::Clustered),
                         SamplingPlan{}, gen);
  REQUIRE(tree.effective_m.size() == 1);
  CHECK(tree.effective_m[0] == 1);
  CHECK(tree.cost_check == CostCheck::Skipped);
  CHECK(tree.predicted_cost == 16);
  CHECK(tree.ledger.inference_count == 8);
}

TEST_CASE("emit_training_data enumerates node labels and finished answers") {
  AnswerTree tree;
  tree.question = numeric_question("q", "42");
  auto add_node = [&](int depth, double conf, std::string prefix) {
    AnswerTreeNode n;
    n.node_id = static_cast<int>(tree.nodes.size());
    n.depth = depth;
    if (depth > 0) n.parent = 0;
    n.prefix = depth == 0 ? SequenceState::question("q") : SequenceState::partial("q", prefix, depth);
    n.record = ConfidenceRecord::from_counts(n.prefix, static_cast<int>(std::lround(conf * 10)), 10);
    tree.nodes.push_back(n);
  };
  add_node(0, 0.7, "");
  add_node(1, 0.9, "Step one.");
  add_node(1, 0.4, "Step two.");
  for (auto [text, ok] : {std::pair{"A. The answer is 42.", true}, std::pair{"B. The answer is 42.", true},
                          std::pair{"C. The answer is 41.", false}}) {
    TreeSample s;
    s.id = static_cast<int>(tree.samples.size());
    s.completion = completion_of(text);
    s.full_answer = text;
    s.correct = ok;
    tree.samples.push_back(s);
  }
  auto ex = emit_training_data(tree);
  REQUIRE(ex.size() == 6);
  std::vector<double> targets;
  for (const auto& e : ex) targets.push_back(e.target_confidence);
  CHECK(targets == std::vector<double>{0.7, 0.9, 0.4, 1.0, 1.0, 0.0});
  CHECK(ex[0].kind == SequenceKind::Question);
  CHECK(ex[1].kind == SequenceKind::QuestionWithPartialAnswer);
  CHECK(ex[5].kind == SequenceKind::QuestionWithAnswer);
  CHECK(ex[1].input_text ==
        "Question: How many items are left?\nStep one.\nHow likely is the above to lead to a "
        "correct final answer? Confidence:");
  CHECK(render_target(0.7) == "0.70");
  CHECK(render_target(1.0 / 3.0) == "0.33");
}

TEST_CASE("root-only tree yields one question example and k answers") {
  SimulatedGenerator gen(flat_world(0.0, 3));
  auto tree = build_tree(gen.world().questions[0].question, params(5, 1, 0, TreeStrategy::Linear),
                         SamplingPlan{}, gen);
  auto ex = emit_training_data(tree);
  REQUIRE(ex.size() == 6);
  CHECK(ex[0].kind == SequenceKind::Question);
  CHECK(ex[0].target_confidence == 0.0);
  for (std::size_t i = 1; i < ex.size(); ++i) {
    CHECK(ex[i].kind == SequenceKind::QuestionWithAnswer);
    CHECK(ex[i].target_confidence == 0.0);
  }
  CHECK(tree.cost_check == CostCheck::Pass);
}

TEST_CASE("pipeline params validation") {
  CHECK_THROWS_AS(params(0, 1, 1, TreeStrategy::Linear).validate(), ArgumentError);
  CHECK_THROWS_AS(params(3, 0, 1, TreeStrategy::Linear).validate(), ArgumentError);
  CHECK_THROWS_AS(params(3, 1, -1, TreeStrategy::Linear).validate(), ArgumentError);
  CHECK(parse_tree_strategy("linear") == TreeStrategy::Linear);
  CHECK_THROWS_AS(parse_tree_strategy("bushy"), ConfigError);
}
