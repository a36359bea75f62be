#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <cctype>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "finece/cli.hpp"
#include "finece/estimator.hpp"
#include "rng.hpp"

namespace finece::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// Runs f(0..n-1) on up to `workers` threads. f must not throw.
template <typename F>
void parallel_for(std::size_t n, int workers, F f) {
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Tracks files written under the output directory for the manifest.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  void write(const std::string& rel, const std::string& content) {
    const fs::path p = dir_ / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text_file(p.string(), content);
    files_.push_back({{"path", rel},
                      {"bytes", content.size()},
                      {"fnv1a", hex64(detail::fnv1a(content))}});
  }

  void write_manifest(const std::string& command, const RunConfig& config, const CostLedger& ledger,
                      int exit_code, Json extra = Json::object()) {
    Json cfg = to_json(config);
    cfg.erase("output_dir");
    Json m{{"command", command},
           {"config_hash", config_hash(config)},
           {"seed", config.seed ? Json(*config.seed) : Json(nullptr)},
           {"exit_code", exit_code},
           {"ledger", to_json(ledger)},
           {"versions",
            {{"finece", kVersion},
             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
             {"cpp_httplib", "0.16.0"}}},
           {"outputs", files_},
           {"config", cfg}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_text_file(path("manifest.json"), m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  Json files_ = Json::array();
};

std::string jsonl(const std::vector<Json>& rows) {
  std::string s;
  for (const auto& r : rows) s += dump_line(r) + "\n";
  return s;
}

SimulatedWorld load_world(const RunConfig& c) {
  const auto& b = c.backend;
  if (!b.world_path.empty()) return world_from_json(read_json_file(b.world_path));
  if (b.synth_kind == "walk")
    return synthesize_walk_world(b.synth.questions, b.synth.seed, b.synth.steps);
  return synthesize_world(b.synth);
}

std::vector<Question> load_questions(const RunConfig& c, const Generator& gen) {
  std::vector<Question> qs;
  if (!c.questions_path.empty()) {
    qs = read_questions(c.questions_path);
  } else if (const auto* sim = dynamic_cast<const SimulatedGenerator*>(&gen)) {
    qs = sim->world().question_list();
  } else {
    throw ConfigError("a questions file is required with the http backend");
  }
  if (qs.empty()) throw ConfigError("no questions");
  std::set<std::string> ids;
  for (const auto& q : qs)
    if (!ids.insert(q.id).second) throw ConfigError("duplicate question id '" + q.id + "'");
  if (const auto* sim = dynamic_cast<const SimulatedGenerator*>(&gen))
    for (const auto& q : qs) sim->world().find(q.id);  // unknown ids fail before any sampling
  return qs;
}

SamplingPlan sampling_plan(const RunConfig& c) {
  SamplingPlan plan = c.sampling;
  plan.config.seed = c.seed;
  return plan;
}

std::string file_stem_for(const std::string& id, std::set<std::string>& used) {
  std::string s;
  for (char ch : id)
    s += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.' ? ch : '_';
  if (s.empty() || s[0] == '.') s = "q" + s;
  std::string candidate = s;
  for (int n = 2; !used.insert(candidate).second; ++n) candidate = s + "-" + std::to_string(n);
  return candidate;
}

const char* failure_kind(const std::exception& e) {
  switch (exit_code_for(e)) {
    case kBackendFailure: return "backend";
    case kCapabilityMismatch: return "capability";
    default: return "input";
  }
}

struct Failure {
  std::string id;
  std::string message;
  int code = kInputError;
  std::string kind;
};

Failure failure_of(std::string id, const std::exception& e) {
  return {std::move(id), e.what(), exit_code_for(e), failure_kind(e)};
}

int exit_code_of(const std::vector<Failure>& failures) {
  if (failures.empty()) return kOk;
  for (const auto& f : failures)
    if (f.code == kBackendFailure) return kBackendFailure;
  return failures.front().code;
}

Json failures_json(const std::vector<Failure>& failures, const char* id_key) {
  Json arr = Json::array();
  for (const auto& f : failures)
    arr.push_back({{id_key, f.id}, {"kind", f.kind}, {"exit_code", f.code}, {"error", f.message}});
  return arr;
}

Json params_json(const PipelineParams& p) {
  return Json{{"k", p.k},
              {"m", p.m},
              {"T", p.T},
              {"strategy", to_string(p.strategy)},
              {"truncation_rule", to_string(p.truncation_rule)}};
}

std::uint64_t predicted_for(PipelineParams p, TreeStrategy s) {
  p.strategy = s;
  return predicted_cost(p);
}

}  // namespace

std::unique_ptr<Generator> make_backend(const RunConfig& c) {
  if (c.backend.kind == "http") {
    HttpGeneratorConfig h = c.backend.http;
    h.api_key = api_key_from_env(c.backend.api_key_env);
    return std::make_unique<HttpGenerator>(std::move(h));
  }
  return std::make_unique<SimulatedGenerator>(load_world(c));
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UnsupportedCapability*>(&e)) return kCapabilityMismatch;
  if (dynamic_cast<const TransportError*>(&e) || dynamic_cast<const DecodeError*>(&e) ||
      dynamic_cast<const PartialResultError*>(&e))
    return kBackendFailure;
  return kInputError;
}

// ---------------------------------------------------------------------------
// construct

int cmd_construct(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  auto backend = make_backend(config);
  const auto questions = load_questions(config, *backend);
  const SamplingPlan plan = sampling_plan(config);
  PipelineParams params = config.pipeline;
  params.k = plan.k;
  OutputDir dir(config.output_dir);

  std::vector<std::optional<AnswerTree>> trees(questions.size());
  std::vector<std::optional<Failure>> failed(questions.size());
  parallel_for(questions.size(), config.workers, [&](std::size_t i) {
    MeteredGenerator metered(*backend);
    try {
      trees[i] = build_tree(questions[i], params, plan, metered);
    } catch (const std::exception& e) {
      failed[i] = failure_of(questions[i].id, e);
    }
  });

  std::vector<Json> by_kind[3];
  Json report_rows = Json::array();
  std::vector<Failure> failures;
  std::set<std::string> stems;
  std::uint64_t measured_total = 0, predicted_total = 0;
  bool all_match = true;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (failed[i]) {
      failures.push_back(*failed[i]);
      err << "question " << questions[i].id << " failed: " << failed[i]->message << "\n";
      continue;
    }
    const AnswerTree& tree = *trees[i];
    for (const auto& ex : emit_training_data(tree))
      by_kind[static_cast<int>(ex.kind)].push_back(to_json(ex));
    dir.write("trees/" + file_stem_for(tree.question.id, stems) + ".json", to_json(tree).dump(2) + "\n");
    measured_total += tree.ledger.inference_count;
    predicted_total += tree.predicted_cost;
    all_match = all_match && tree.cost_check != CostCheck::Fail;
    report_rows.push_back({{"question_id", tree.question.id},
                           {"measured", tree.ledger.inference_count},
                           {"predicted", tree.predicted_cost},
                           {"cost_check", to_string(tree.cost_check)},
                           {"effective_m", tree.effective_m},
                           {"prompt_tokens", tree.ledger.prompt_tokens},
                           {"completion_tokens", tree.ledger.completion_tokens},
                           {"notes", tree.notes}});
  }

  dir.write("train_question.jsonl", jsonl(by_kind[static_cast<int>(SequenceKind::Question)]));
  dir.write("train_partial.jsonl",
            jsonl(by_kind[static_cast<int>(SequenceKind::QuestionWithPartialAnswer)]));
  dir.write("train_full.jsonl", jsonl(by_kind[static_cast<int>(SequenceKind::QuestionWithAnswer)]));
  Json report{{"params", params_json(params)},
              {"predicted_per_question",
               {{"full_tree", predicted_for(params, TreeStrategy::FullTree)},
                {"clustered", predicted_for(params, TreeStrategy::Clustered)},
                {"linear", predicted_for(params, TreeStrategy::Linear)}}},
              {"questions", report_rows},
              {"totals",
               {{"questions", report_rows.size()},
                {"failed", failures.size()},
                {"measured", measured_total},
                {"predicted", predicted_total},
                {"all_match", all_match}}}};
  dir.write("cost_report.json", report.dump(2) + "\n");
  if (!failures.empty()) dir.write("failures.json", failures_json(failures, "question_id").dump(2) + "\n");

  const int code = exit_code_of(failures);
  dir.write_manifest("construct", config, backend->ledger(), code,
                     Json{{"questions", questions.size()}, {"failed", failures.size()}});
  out << "construct: " << questions.size() - failures.size() << "/" << questions.size()
      << " questions, " << measured_total << " inferences (predicted " << predicted_total << "), "
      << by_kind[0].size() << " question / " << by_kind[1].size() << " partial / "
      << by_kind[2].size() << " full examples -> " << config.output_dir << "\n";
  return code;
}

// ---------------------------------------------------------------------------
// estimate

namespace {

struct InputSequence {
  std::string record_id;
  const Question* question = nullptr;
  SequenceState seq;
};

std::vector<InputSequence> read_sequences(const std::string& path,
                                          const std::vector<Question>& questions) {
  std::map<std::string, const Question*, std::less<>> by_id;
  for (const auto& q : questions) by_id[q.id] = &q;
  std::vector<InputSequence> out;
  std::set<std::string> ids;
  for (const auto& l : read_jsonl(path)) {
    const std::string where = path + ":" + std::to_string(l.line) + ": ";
    try {
      const Json& j = l.value;
      if (!j.is_object() || !j.contains("question_id") || !j["question_id"].is_string())
        throw ConfigError("needs a string 'question_id'");
      InputSequence in;
      const std::string qid = j["question_id"].get<std::string>();
      auto it = by_id.find(qid);
      if (it == by_id.end()) throw ConfigError("unknown question '" + qid + "'");
      in.question = it->second;
      const std::string prefix = j.value("prefix", std::string());
      const int index = j.value("position_index", prefix.empty() ? 0 : 1);
      SequenceKind kind = j.contains("kind") ? parse_sequence_kind(j["kind"].get<std::string>())
                          : prefix.empty()   ? SequenceKind::Question
                                             : SequenceKind::QuestionWithPartialAnswer;
      switch (kind) {
        case SequenceKind::Question:
          in.seq = SequenceState::question(qid);
          break;
        case SequenceKind::QuestionWithPartialAnswer:
          in.seq = SequenceState::partial(qid, prefix, index);
          break;
        case SequenceKind::QuestionWithAnswer:
          in.seq = SequenceState::full(qid, prefix, index);
          break;
      }
      in.seq.validate();
      in.record_id = j.contains("record_id") ? j["record_id"].get<std::string>()
                                             : qid + "#" + std::to_string(l.line);
      if (!ids.insert(in.record_id).second)
        throw ConfigError("duplicate record_id '" + in.record_id + "'");
      out.push_back(std::move(in));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + "field has the wrong type");
    } catch (const Error& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (out.empty()) throw ConfigError("no sequences in '" + path + "'");
  return out;
}

Json record_json(const std::string& record_id, const PositionRecord& pr) {
  const auto& r = pr.record;
  Json j{{"record_id", record_id},
         {"question_id", r.sequence.question_id},
         {"kind", to_string(r.sequence.kind)},
         {"position_index", r.sequence.position_index},
         {"prefix", r.sequence.prefix_text},
         {"raw_conf", r.raw_conf},
         {"k_used", r.k_used},
         {"n_correct", r.n_correct}};
  if (r.adjusted_conf) j["adjusted_conf"] = *r.adjusted_conf;
  j["token_ratio"] = pr.token_ratio ? Json(*pr.token_ratio) : Json(nullptr);
  j["position_tag"] = pr.tag ? Json(to_string(*pr.tag)) : Json(nullptr);
  if (pr.position) {
    j["trigger"] = to_string(pr.position->trigger);
    j["token_offset"] = pr.position->token_offset;
    j["char_offset"] = pr.position->char_offset;
    j["tokens_generated"] = pr.tokens_generated;
  }
  if (r.is_final_correct) j["is_final_correct"] = *r.is_final_correct;
  if (pr.bci)
    j["bci"] = {{"depth_reached", pr.bci->depth_reached},
                {"truncated_early", pr.bci->truncated_early},
                {"nodes_evaluated", pr.bci->nodes_evaluated}};
  return j;
}

struct EstimateOutput {
  std::vector<Json> records;
  std::vector<Json> labels;
  std::optional<Json> answer;
  std::optional<Failure> failure;
};

}  // namespace

int cmd_estimate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  if (config.input_path.empty()) throw ConfigError("estimate needs an input file (--input)");
  auto backend = make_backend(config);
  const auto questions = load_questions(config, *backend);
  const auto inputs = read_sequences(config.input_path, questions);
  const bool generate = config.estimate_mode == "generate";
  if (config.positions.trigger == PositionTrigger::Entropy && (generate || !config.bci.trivial()) &&
      !backend->supports_logprobs())
    throw UnsupportedCapability("entropy calibration positions need token logprobs, which the '" +
                                config.backend.kind + "' backend does not provide");

  EstimateOptions opt;
  opt.plan = sampling_plan(config);
  opt.answer_config = opt.plan.config;
  opt.positions = config.positions;
  opt.bci = config.bci;

  // Sequences of one question go to one worker, in input order, so the
  // simulated backend sees the same call sequence on every run.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < inputs.size(); ++i) groups[inputs[i].seq.question_id].push_back(i);
  std::vector<const std::vector<std::size_t>*> group_list;
  for (const auto& [id, idx] : groups) group_list.push_back(&idx);

  std::vector<EstimateOutput> results(inputs.size());
  parallel_for(group_list.size(), config.workers, [&](std::size_t g) {
    MeteredGenerator metered(*backend);
    for (std::size_t i : *group_list[g]) {
      const auto& in = inputs[i];
      auto& res = results[i];
      try {
        if (!generate || in.seq.kind == SequenceKind::QuestionWithAnswer) {
          res.records.push_back(record_json(in.record_id, estimate_sequence(*in.question, in.seq, metered, opt)));
          continue;
        }
        AnswerEstimate est = estimate_along_answer(*in.question, in.seq, metered, opt);
        for (std::size_t r = 0; r < est.records.size(); ++r) {
          const std::string rid = in.record_id + "@" + std::to_string(r + 1);
          res.records.push_back(record_json(rid, est.records[r]));
          res.labels.push_back(
              {{"record_id", rid}, {"question_id", in.question->id}, {"correct", est.final_correct}});
        }
        Json a{{"record_id", in.record_id},
               {"question_id", in.question->id},
               {"answer", join_continuation(in.seq.prefix_text, est.answer.text)},
               {"finish_reason", to_string(est.answer.finish_reason)},
               {"correct", est.final_correct},
               {"tokens", est.answer.tokens.size()},
               {"positions", est.records.size()}};
        if (est.answer.has_logprobs() && !est.answer.tokens.empty())
          a["first_prob"] = first_prob(est.answer);
        res.answer = std::move(a);
      } catch (const std::exception& e) {
        res.records.clear();
        res.labels.clear();
        res.failure = failure_of(in.record_id, e);
      }
    }
  });

  OutputDir dir(config.output_dir);
  std::vector<Json> records, labels, answers;
  std::vector<Failure> failures;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& r = results[i];
    if (r.failure) {
      failures.push_back(*r.failure);
      err << "sequence " << inputs[i].record_id << " failed: " << r.failure->message << "\n";
      continue;
    }
    records.insert(records.end(), r.records.begin(), r.records.end());
    labels.insert(labels.end(), r.labels.begin(), r.labels.end());
    if (r.answer) answers.push_back(*r.answer);
  }
  dir.write("records.jsonl", jsonl(records));
  if (generate) {
    dir.write("labels.jsonl", jsonl(labels));
    dir.write("answers.jsonl", jsonl(answers));
  }
  if (!failures.empty()) dir.write("failures.json", failures_json(failures, "record_id").dump(2) + "\n");
  const int code = exit_code_of(failures);
  dir.write_manifest("estimate", config, backend->ledger(), code,
                     Json{{"sequences", inputs.size()}, {"records", records.size()}, {"failed", failures.size()}});
  out << "estimate: " << records.size() << " records from " << inputs.size() - failures.size() << "/"
      << inputs.size() << " sequences -> " << config.output_dir << "\n";
  return code;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream&) {
  config.validate();
  if (config.input_path.empty()) throw ConfigError("evaluate needs a records file (--input)");

  std::map<std::string, bool> label_by_record, label_by_question;
  const bool have_labels = !config.labels_path.empty();
  if (have_labels) {
    for (const auto& l : read_jsonl(config.labels_path)) {
      const Json& j = l.value;
      const std::string where = config.labels_path + ":" + std::to_string(l.line) + ": ";
      if (!j.is_object() || !j.contains("correct") || !j["correct"].is_boolean())
        throw ConfigError(where + "label needs a boolean 'correct'");
      if (j.contains("record_id") && j["record_id"].is_string())
        label_by_record[j["record_id"].get<std::string>()] = j["correct"].get<bool>();
      else if (j.contains("question_id") && j["question_id"].is_string())
        label_by_question[j["question_id"].get<std::string>()] = j["correct"].get<bool>();
      else
        throw ConfigError(where + "label needs a 'record_id' or a 'question_id'");
    }
  }

  std::vector<LabeledPrediction> preds;
  std::vector<std::string> unjoinable;
  std::size_t adjusted_used = 0;
  for (const auto& l : read_jsonl(config.input_path)) {
    const Json& j = l.value;
    const std::string where = config.input_path + ":" + std::to_string(l.line) + ": ";
    if (!j.is_object() || !j.contains("raw_conf") || !j["raw_conf"].is_number())
      throw ConfigError(where + "record needs a numeric 'raw_conf'");
    const std::string rid = j.value("record_id", std::string());
    const std::string qid = j.value("question_id", std::string());
    std::optional<bool> label;
    if (have_labels) {
      if (auto it = label_by_record.find(rid); !rid.empty() && it != label_by_record.end())
        label = it->second;
      else if (auto jt = label_by_question.find(qid); !qid.empty() && jt != label_by_question.end())
        label = jt->second;
    } else if (j.contains("is_final_correct") && j["is_final_correct"].is_boolean()) {
      label = j["is_final_correct"].get<bool>();
    }
    if (!label) {
      unjoinable.push_back(!rid.empty() ? rid : "line " + std::to_string(l.line));
      continue;
    }
    LabeledPrediction p;
    const bool has_adjusted = j.contains("adjusted_conf") && j["adjusted_conf"].is_number();
    if (config.confidence_field == "adjusted" && !has_adjusted)
      throw ConfigError(where + "record has no 'adjusted_conf'");
    const bool use_adjusted = has_adjusted && config.confidence_field != "raw";
    p.confidence = j[use_adjusted ? "adjusted_conf" : "raw_conf"].get<double>();
    adjusted_used += use_adjusted;
    if (p.confidence < 0.0 || p.confidence > 1.0) throw ConfigError(where + "confidence outside [0, 1]");
    p.correct = *label;
    if (j.contains("position_tag") && j["position_tag"].is_string())
      p.position_tag = parse_position_tag(j["position_tag"].get<std::string>());
    preds.push_back(p);
  }
  if (!unjoinable.empty()) {
    std::string ids;
    for (const auto& id : unjoinable) ids += (ids.empty() ? "" : ", ") + id;
    throw ConfigError("records without a correctness label: " + ids);
  }
  if (preds.empty()) throw ConfigError("no records in '" + config.input_path + "'");

  const MetricReport pooled = evaluate(preds, config.num_bins);
  Json per_position = Json::object();
  double ece_sum = 0, acc_sum = 0, auroc_sum = 0;
  int tags = 0, auroc_n = 0;
  for (PositionTag t : {PositionTag::P1, PositionTag::PzMinus1, PositionTag::Final}) {
    std::vector<LabeledPrediction> sub;
    for (const auto& p : preds)
      if (p.position_tag == t) sub.push_back(p);
    if (sub.empty()) continue;
    const MetricReport r = evaluate(sub, config.num_bins);
    per_position[std::string(to_string(t))] = to_json(r);
    ece_sum += r.ece;
    acc_sum += r.accuracy;
    ++tags;
    if (r.auroc) {
      auroc_sum += *r.auroc;
      ++auroc_n;
    }
  }
  Json position_mean = nullptr;
  if (tags > 0)
    position_mean = {{"positions", tags},
                     {"ece", ece_sum / tags},
                     {"auroc", auroc_n ? Json(auroc_sum / auroc_n) : Json(nullptr)},
                     {"accuracy", acc_sum / tags}};

  Json selective = Json::array();
  for (double t : config.thresholds) {
    const SelectiveResult s = selective_accuracy(preds, t);
    selective.push_back({{"threshold", t},
                         {"accuracy", s.accuracy ? Json(*s.accuracy) : Json(nullptr)},
                         {"coverage", s.coverage},
                         {"retained", s.retained},
                         {"overall_accuracy", pooled.accuracy}});
  }

  Json report{{"records", preds.size()},
              {"confidence_field", config.confidence_field},
              {"adjusted_used", adjusted_used},
              {"pooled", to_json(pooled)},
              {"per_position", per_position},
              {"per_position_mean", position_mean},
              {"selective", selective}};
  OutputDir dir(config.output_dir);
  dir.write("report.json", report.dump(2) + "\n");
  dir.write("reliability.csv", bins_to_csv(pooled.bins));
  dir.write_manifest("evaluate", config, CostLedger{}, kOk, Json{{"records", preds.size()}});

  char line[160];
  char auroc[32] = "undefined";
  if (pooled.auroc) std::snprintf(auroc, sizeof(auroc), "%.4f", *pooled.auroc);
  std::snprintf(line, sizeof(line), "evaluate: n=%zu ece=%.4f auroc=%s accuracy=%.4f\n", pooled.n,
                pooled.ece, auroc, pooled.accuracy);
  out << line << "threshold  accuracy  coverage\n";
  for (const auto& s : selective) {
    char acc[32] = "-";
    if (!s["accuracy"].is_null()) std::snprintf(acc, sizeof(acc), "%.4f", s["accuracy"].get<double>());
    std::snprintf(line, sizeof(line), "%9.2f  %8s  %8.4f\n", s["threshold"].get<double>(), acc,
                  s["coverage"].get<double>());
    out << line;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// cost, simulate-world

int cmd_cost(const RunConfig& config, std::ostream& out, std::ostream&) {
  PipelineParams p = config.pipeline;
  p.k = config.sampling.k;
  try {
    p.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  char line[160];
  std::snprintf(line, sizeof(line), "k=%d m=%d T=%d\n", p.k, p.m, p.T);
  out << line;
  std::snprintf(line, sizeof(line), "%-10s %-22s %s\n", "strategy", "formula", "predicted_cost");
  out << line;
  const std::pair<TreeStrategy, const char*> rows[] = {
      {TreeStrategy::FullTree, "sum_{i=1}^{T+1} k^i"},
      {TreeStrategy::Clustered, "k * sum_{i=0}^{T} m^i"},
      {TreeStrategy::Linear, "k * (1 + m*T)"}};
  for (const auto& [s, formula] : rows) {
    std::snprintf(line, sizeof(line), "%-10s %-22s %llu\n", std::string(to_string(s)).c_str(), formula,
                  static_cast<unsigned long long>(predicted_for(p, s)));
    out << line;
  }
  return kOk;
}

int cmd_simulate_world(const WorldCommand& command, std::ostream& out, std::ostream&) {
  if (command.kind != "shop" && command.kind != "walk")
    throw ConfigError("world kind must be 'shop' or 'walk'");
  if (command.options.questions < 1 || command.options.steps < 1 ||
      command.options.sentences_per_paragraph < 1)
    throw ConfigError("questions, steps and sentences per paragraph must be >= 1");
  const SimulatedWorld world =
      command.kind == "walk"
          ? synthesize_walk_world(command.options.questions, command.options.seed, command.options.steps)
          : synthesize_world(command.options);
  const std::string text = to_json(world).dump(2) + "\n";
  if (command.world_out.empty())
    out << text;
  else
    write_text_file(command.world_out, text);
  if (!command.questions_out.empty()) {
    std::vector<Json> rows;
    for (const auto& q : world.question_list()) rows.push_back(to_json(q));
    write_text_file(command.questions_out, jsonl(rows));
  }
  return kOk;
}

}  // namespace finece::cli
