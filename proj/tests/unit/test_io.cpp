#include <doctest.h>

#include <filesystem>

#include "finece/io.hpp"
#include "finece/pipeline.hpp"
#include "test_worlds.hpp"

using namespace finece;
using namespace finece::testing;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "finece_io_tests";
  fs::create_directories(dir);
  const std::string p = (dir / name).string();
  write_text_file(p, content);
  return p;
}

}  // namespace

TEST_CASE("questions round-trip and accept numeric gold answers") {
  Question q = numeric_question("a1", "1200");
  Question back = question_from_json(to_json(q));
  CHECK(back.id == q.id);
  CHECK(back.text == q.text);
  CHECK(back.gold_answer == q.gold_answer);
  CHECK(back.matcher_kind == q.matcher_kind);

  Question n = question_from_json(Json::parse(R"({"id":"b","text":"t","gold_answer":42})"));
  CHECK(n.gold_answer == "42");
  CHECK(n.matcher_kind == MatcherKind::NumericFinalAnswer);
  CHECK_THROWS_AS(question_from_json(Json::parse(R"({"id":"b","text":"t"})")), ConfigError);
}

TEST_CASE("read_questions names the bad line and rejects empty files") {
  const auto good = temp_file("good.jsonl",
                              "{\"id\":\"a\",\"text\":\"x\",\"gold_answer\":\"1\"}\n\n"
                              "{\"id\":\"b\",\"text\":\"y\",\"gold_answer\":\"2\"}\n");
  auto qs = read_questions(good);
  REQUIRE(qs.size() == 2);
  CHECK(qs[1].id == "b");

  const auto bad = temp_file("bad.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"gold_answer\":\"1\"}\n{oops\n");
  try {
    read_questions(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  const auto missing = temp_file("missing.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n");
  try {
    read_questions(missing);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }
  const auto empty = temp_file("empty.jsonl", "\n");
  try {
    read_questions(empty);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("no questions") != std::string::npos);
  }
}

TEST_CASE("worlds survive a JSON round trip with identical behaviour") {
  SimulatedWorld w = forked_world();
  SimulatedWorld back = world_from_json(to_json(w));
  CHECK(to_json(back) == to_json(w));
  const std::string prefix = "We take the good path here.";
  CHECK(back.true_confidence("q", prefix) == w.true_confidence("q", prefix));

  SimulatedGenerator a(w), b(back);
  GenerationConfig cfg;
  cfg.n = 4;
  Prompt p{"q", w.questions[0].question.text, ""};
  auto ca = a.generate(p, cfg), cb = b.generate(p, cfg);
  for (int i = 0; i < 4; ++i) CHECK(ca[i].text == cb[i].text);
}

TEST_CASE("world fragments may be plain strings") {
  Json j = Json::parse(R"({"questions":[{"id":"q","text":"t","gold_answer":"3","steps":2,
    "rules":[{"p_correct":0.5,"distractors":["4"],"fragments":["One step.", {"text":"Two.","weight":2}]}]}]})");
  SimulatedWorld w = world_from_json(j);
  REQUIRE(w.questions[0].rules[0].fragments.size() == 2);
  CHECK(w.questions[0].rules[0].fragments[0].weight == 1.0);
  CHECK(w.questions[0].rules[0].fragments[1].weight == 2.0);
}

TEST_CASE("tree dumps list every node, edge and sample") {
  SimulatedGenerator gen(flat_world(0.5, 4, 1));
  PipelineParams params;
  params.k = 3;
  params.m = 2;
  params.T = 2;
  SamplingPlan plan;
  plan.k = 3;
  AnswerTree tree = build_tree(gen.world().questions[0].question, params, plan, gen);
  Json j = to_json(tree);
  CHECK(j["nodes"].size() == tree.nodes.size());
  CHECK(j["samples"].size() == tree.samples.size());
  CHECK(j["edges"].size() == tree.nodes.size() - 1);
  CHECK(j["ledger"]["inference_count"] == tree.ledger.inference_count);
  CHECK(j["cost_check"] == "pass");

  for (const auto& ex : emit_training_data(tree)) {
    Json e = to_json(ex);
    CHECK(e["target_text"] == render_target(ex.target_confidence));
    CHECK(parse_sequence_kind(e["kind"].get<std::string>()) == ex.kind);
  }
}

TEST_CASE("reliability CSV has a header and one row per bin") {
  std::vector<LabeledPrediction> preds{{0.05, false, {}}, {0.95, true, {}}};
  auto bins = reliability_bins(preds, 4);
  std::string csv = bins_to_csv(bins);
  CHECK(csv.rfind("lower,upper,mean_conf,acc,count\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
