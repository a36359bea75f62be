#include "finece/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace finece {

namespace {

template <typename T>
T field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(what) + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback, const char* what) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, what);
}

}  // namespace

std::vector<JsonLine> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::vector<JsonLine> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    try {
      out.push_back({no, Json::parse(line)});
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(no) + ": malformed JSON line");
    }
  }
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON (" + e.what() + ")");
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

Question question_from_json(const Json& j) {
  Question q;
  q.id = field<std::string>(j, "id", "question");
  q.text = field<std::string>(j, "text", "question");
  // Gold answers may be given as numbers.
  if (j.contains("gold_answer") && j.at("gold_answer").is_number())
    q.gold_answer = j.at("gold_answer").dump();
  else
    q.gold_answer = field<std::string>(j, "gold_answer", "question");
  q.matcher_kind = parse_matcher_kind(field_or<std::string>(j, "matcher", "numeric", "question"));
  q.validate();
  return q;
}

Json to_json(const Question& q) {
  return Json{{"id", q.id}, {"text", q.text}, {"gold_answer", q.gold_answer},
              {"matcher", to_string(q.matcher_kind)}};
}

std::vector<Question> read_questions(const std::string& path) {
  std::vector<Question> out;
  for (const auto& l : read_jsonl(path)) {
    try {
      out.push_back(question_from_json(l.value));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(l.line) + ": " + e.what());
    }
  }
  if (out.empty()) throw ConfigError("no questions in '" + path + "'");
  return out;
}

Json to_json(const SimulatedWorld& world) {
  Json qs = Json::array();
  for (const auto& wq : world.questions) {
    Json rules = Json::array();
    for (const auto& r : wq.rules) {
      Json frs = Json::array();
      for (const auto& f : r.fragments) frs.push_back({{"text", f.text}, {"weight", f.weight}});
      rules.push_back({{"pattern", r.pattern},
                       {"p_correct", r.p_correct},
                       {"distractors", r.distractors},
                       {"fragments", frs}});
    }
    Json q = to_json(wq.question);
    q["steps"] = wq.steps;
    q["sentences_per_paragraph"] = wq.sentences_per_paragraph;
    q["rules"] = rules;
    qs.push_back(q);
  }
  return Json{{"rng_seed", world.rng_seed}, {"questions", qs}};
}

SimulatedWorld world_from_json(const Json& j) {
  SimulatedWorld w;
  w.rng_seed = field_or<std::uint64_t>(j, "rng_seed", 0, "world");
  for (const auto& jq : field<Json>(j, "questions", "world")) {
    WorldQuestion wq;
    wq.question = question_from_json(jq);
    wq.steps = field_or<int>(jq, "steps", 6, "world question");
    wq.sentences_per_paragraph = field_or<int>(jq, "sentences_per_paragraph", 1, "world question");
    for (const auto& jr : field<Json>(jq, "rules", "world question")) {
      BranchRule r;
      r.pattern = field_or<std::string>(jr, "pattern", "", "rule");
      r.p_correct = field<double>(jr, "p_correct", "rule");
      r.distractors = field_or<std::vector<std::string>>(jr, "distractors", {}, "rule");
      for (const auto& jf : field_or<Json>(jr, "fragments", Json::array(), "rule")) {
        if (jf.is_string())
          r.fragments.push_back({jf.get<std::string>(), 1.0});
        else
          r.fragments.push_back({field<std::string>(jf, "text", "fragment"),
                                 field_or<double>(jf, "weight", 1.0, "fragment")});
      }
      wq.rules.push_back(std::move(r));
    }
    w.questions.push_back(std::move(wq));
  }
  w.validate();
  return w;
}

Json to_json(const CostLedger& l) {
  return Json{{"inference_count", l.inference_count},
              {"prompt_tokens", l.prompt_tokens},
              {"completion_tokens", l.completion_tokens}};
}

Json to_json(const SequenceState& s) {
  return Json{{"question_id", s.question_id},
              {"kind", to_string(s.kind)},
              {"prefix", s.prefix_text},
              {"position_index", s.position_index}};
}

Json to_json(const ConfidenceRecord& r) {
  Json j{{"sequence", to_json(r.sequence)},
         {"raw_conf", r.raw_conf},
         {"k_used", r.k_used},
         {"n_correct", r.n_correct}};
  if (r.adjusted_conf) j["adjusted_conf"] = *r.adjusted_conf;
  if (r.is_final_correct) j["is_final_correct"] = *r.is_final_correct;
  return j;
}

Json to_json(const TrainingExample& ex) {
  return Json{{"kind", to_string(ex.kind)},
              {"input", ex.input_text},
              {"target_confidence", ex.target_confidence},
              {"target_text", render_target(ex.target_confidence)},
              {"question_id", ex.question_id},
              {"node_id", ex.provenance}};
}

Json to_json(const AnswerTree& tree) {
  Json nodes = Json::array(), edges = Json::array(), samples = Json::array();
  for (const auto& n : tree.nodes) {
    Json jn{{"node_id", n.node_id},
            {"depth", n.depth},
            {"parent", n.parent ? Json(*n.parent) : Json(nullptr)},
            {"source_sample", n.source_sample ? Json(*n.source_sample) : Json(nullptr)},
            {"kind", to_string(n.prefix.kind)},
            {"prefix", n.prefix.prefix_text},
            {"raw_conf", n.record.raw_conf},
            {"n_correct", n.record.n_correct},
            {"k_used", n.record.k_used},
            {"children", n.children},
            {"samples", n.samples}};
    if (n.representative_of_cluster) jn["representative_of_cluster"] = *n.representative_of_cluster;
    nodes.push_back(std::move(jn));
    for (int c : n.children) edges.push_back({n.node_id, c});
  }
  for (const auto& s : tree.samples)
    samples.push_back({{"id", s.id},
                       {"node_id", s.node_id},
                       {"ordinal", s.ordinal},
                       {"continuation", s.completion.text},
                       {"finish_reason", to_string(s.completion.finish_reason)},
                       {"correct", s.correct}});
  return Json{{"question_id", tree.question.id},
              {"params",
               {{"k", tree.params.k},
                {"m", tree.params.m},
                {"T", tree.params.T},
                {"strategy", to_string(tree.params.strategy)},
                {"truncation_rule", to_string(tree.params.truncation_rule)}}},
              {"nodes", nodes},
              {"edges", edges},
              {"samples", samples},
              {"ledger", to_json(tree.ledger)},
              {"predicted_cost", tree.predicted_cost},
              {"cost_check", to_string(tree.cost_check)},
              {"effective_m", tree.effective_m},
              {"notes", tree.notes}};
}

Json to_json(const MetricReport& r) {
  Json bins = Json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"lower", b.lower},
                    {"upper", b.upper},
                    {"mean_conf", b.mean_conf},
                    {"acc", b.empirical_acc},
                    {"count", b.count}});
  return Json{{"n", r.n},
              {"ece", r.ece},
              {"auroc", r.auroc ? Json(*r.auroc) : Json(nullptr)},
              {"accuracy", r.accuracy},
              {"bins", bins}};
}

std::string bins_to_csv(const std::vector<ReliabilityBin>& bins) {
  std::ostringstream out;
  out << "lower,upper,mean_conf,acc,count\n";
  char buf[160];
  for (const auto& b : bins) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.17g,%.17g,%zu\n", b.lower, b.upper, b.mean_conf,
                  b.empirical_acc, b.count);
    out << buf;
  }
  return out.str();
}

std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

}  // namespace finece
