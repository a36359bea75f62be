#include <cstdio>
#include <filesystem>
#include <set>

#include "finece/cli.hpp"
#include "rng.hpp"

namespace finece::cli {

namespace {

// Reads one object of the config, remembering which keys were consumed so
// that typos surface as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: '" + path(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      target.reset();
      return;
    }
    T v{};
    get(key, v);
    target = v;
  }

  // Enumerations are stored as strings.
  template <typename E, typename Parse>
  void get_enum(const char* key, E& target, Parse parse) {
    std::string s;
    get(key, s);
    if (!s.empty()) target = parse(s);
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const Json empty = Json::object();
    return Section(j_.contains(key) && !j_.at(key).is_null() ? j_.at(key) : empty, path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("config: unknown key '" + path(it.key()) + "'");
  }

 private:
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const Json& j_;
  std::string name_;
  std::set<std::string, std::less<>> seen_;
};

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

void RunConfig::validate() const {
  check_range(backend.kind == "simulated" || backend.kind == "http",
              "backend.kind must be 'simulated' or 'http'");
  if (backend.kind == "simulated" && backend.world_path.empty()) {
    check_range(backend.synth_kind == "shop" || backend.synth_kind == "walk",
                "backend.synth.kind must be 'shop' or 'walk'");
    check_range(backend.synth.questions >= 1, "backend.synth.questions must be >= 1");
    check_range(backend.synth.steps >= 1, "backend.synth.steps must be >= 1");
    check_range(backend.synth.sentences_per_paragraph >= 1,
                "backend.synth.sentences_per_paragraph must be >= 1");
  }
  if (backend.kind == "simulated" && !backend.world_path.empty())
    check_range(std::filesystem::is_regular_file(backend.world_path),
                "world file '" + backend.world_path + "' does not exist");
  if (backend.kind == "http") backend.http.validate();

  try {
    sampling.validate();
    PipelineParams p = pipeline;
    p.k = sampling.k;
    p.validate();
    positions.validate();
    bci.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_range(estimate_mode == "sequence" || estimate_mode == "generate",
              "estimate.mode must be 'sequence' or 'generate'");
  check_range(num_bins >= 1, "metrics.num_bins must be >= 1");
  for (double t : thresholds)
    check_range(t >= 0.0 && t <= 1.0, "metrics.thresholds must lie in [0, 1]");
  check_range(confidence_field == "auto" || confidence_field == "raw" ||
                  confidence_field == "adjusted",
              "metrics.confidence must be 'auto', 'raw' or 'adjusted'");
  check_range(workers >= 1, "workers must be >= 1");
  for (const auto* p : {&questions_path, &input_path, &labels_path})
    if (!p->empty())
      check_range(std::filesystem::is_regular_file(*p), "input file '" + *p + "' does not exist");
  check_range(!output_dir.empty(), "output_dir must not be empty");
}

Json to_json(const RunConfig& c) {
  const auto& b = c.backend;
  Json backend{{"kind", b.kind},
               {"world", b.world_path},
               {"synth",
                {{"kind", b.synth_kind},
                 {"questions", b.synth.questions},
                 {"seed", b.synth.seed},
                 {"steps", b.synth.steps},
                 {"sentences_per_paragraph", b.synth.sentences_per_paragraph}}},
               {"endpoint_url", b.http.endpoint_url},
               {"model", b.http.model},
               {"api_key_env", b.api_key_env},
               {"max_in_flight", b.http.max_in_flight},
               {"timeout_ms", b.http.timeout_ms},
               {"max_attempts", b.http.max_attempts},
               {"backoff_ms", b.http.backoff_ms},
               {"logprobs", b.http.logprobs_supported},
               {"system_prompt", b.http.system_prompt},
               {"instruction", b.http.instruction}};
  const auto& s = c.sampling;
  Json sampling{{"k", s.k},
                {"temperature", s.config.temperature},
                {"top_p", s.config.top_p},
                {"max_tokens", s.config.max_tokens},
                {"batch_size", s.batch_size},
                {"matcher", s.matcher ? Json(to_string(*s.matcher)) : Json(nullptr)}};
  return Json{
      {"backend", backend},
      {"sampling", sampling},
      {"pipeline",
       {{"m", c.pipeline.m},
        {"T", c.pipeline.T},
        {"strategy", to_string(c.pipeline.strategy)},
        {"truncation_rule", to_string(c.pipeline.truncation_rule)}}},
      {"positions",
       {{"strategy", to_string(c.positions.trigger)},
        {"interval", c.positions.interval},
        {"entropy_threshold", c.positions.entropy_threshold}}},
      {"bci",
       {{"alpha", c.bci.alpha},
        {"width", c.bci.width},
        {"depth", c.bci.depth},
        {"path_mode", c.bci.path_mode}}},
      {"estimate", {{"mode", c.estimate_mode}}},
      {"metrics",
       {{"num_bins", c.num_bins}, {"thresholds", c.thresholds}, {"confidence", c.confidence_field}}},
      {"questions", c.questions_path},
      {"input", c.input_path},
      {"labels", c.labels_path},
      {"output_dir", c.output_dir},
      {"seed", c.seed ? Json(*c.seed) : Json(nullptr)},
      {"workers", c.workers}};
}

RunConfig config_from_json(const Json& input) {
  // A manifest carries the resolved config of the run that wrote it.
  const Json& j = input.is_object() && input.contains("config_hash") && input.contains("config")
                      ? input.at("config")
                      : input;
  RunConfig c;
  Section root(j, "");

  Section b = root.sub("backend");
  b.get("kind", c.backend.kind);
  b.get("world", c.backend.world_path);
  Section synth = b.sub("synth");
  synth.get("kind", c.backend.synth_kind);
  synth.get("questions", c.backend.synth.questions);
  synth.get("seed", c.backend.synth.seed);
  synth.get("steps", c.backend.synth.steps);
  synth.get("sentences_per_paragraph", c.backend.synth.sentences_per_paragraph);
  synth.finish();
  b.get("endpoint_url", c.backend.http.endpoint_url);
  b.get("model", c.backend.http.model);
  b.get("api_key_env", c.backend.api_key_env);
  b.get("max_in_flight", c.backend.http.max_in_flight);
  b.get("timeout_ms", c.backend.http.timeout_ms);
  b.get("max_attempts", c.backend.http.max_attempts);
  b.get("backoff_ms", c.backend.http.backoff_ms);
  b.get("logprobs", c.backend.http.logprobs_supported);
  b.get("system_prompt", c.backend.http.system_prompt);
  b.get("instruction", c.backend.http.instruction);
  b.finish();

  Section s = root.sub("sampling");
  s.get("k", c.sampling.k);
  s.get("temperature", c.sampling.config.temperature);
  s.get("top_p", c.sampling.config.top_p);
  s.get("max_tokens", c.sampling.config.max_tokens);
  s.get("batch_size", c.sampling.batch_size);
  std::optional<std::string> matcher;
  s.get("matcher", matcher);
  if (matcher) c.sampling.matcher = parse_matcher_kind(*matcher);
  s.finish();

  Section p = root.sub("pipeline");
  p.get("m", c.pipeline.m);
  p.get("T", c.pipeline.T);
  p.get_enum("strategy", c.pipeline.strategy, parse_tree_strategy);
  p.get_enum("truncation_rule", c.pipeline.truncation_rule, parse_truncation_rule);
  p.finish();

  Section pos = root.sub("positions");
  pos.get_enum("strategy", c.positions.trigger, parse_position_trigger);
  pos.get("interval", c.positions.interval);
  pos.get("entropy_threshold", c.positions.entropy_threshold);
  pos.finish();

  Section bci = root.sub("bci");
  bci.get("alpha", c.bci.alpha);
  bci.get("width", c.bci.width);
  bci.get("depth", c.bci.depth);
  bci.get("path_mode", c.bci.path_mode);
  bci.finish();

  Section est = root.sub("estimate");
  est.get("mode", c.estimate_mode);
  est.finish();

  Section met = root.sub("metrics");
  met.get("num_bins", c.num_bins);
  met.get("thresholds", c.thresholds);
  met.get("confidence", c.confidence_field);
  met.finish();

  root.get("questions", c.questions_path);
  root.get("input", c.input_path);
  root.get("labels", c.labels_path);
  root.get("output_dir", c.output_dir);
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  root.finish();

  c.pipeline.k = c.sampling.k;
  return c;
}

std::string config_hash(const RunConfig& config) {
  Json j = to_json(config);
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(j.dump())));
  return buf;
}

}  // namespace finece::cli
