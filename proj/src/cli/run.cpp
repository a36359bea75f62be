#include <ostream>

#include <CLI11.hpp>

#include "finece/cli.hpp"

namespace finece::cli {

namespace {

// Flags are collected into a JSON overlay in config-file layout and merged
// over the file, so both sources go through the same parsing and checks.
class Overrides {
 public:
  template <typename T>
  void option(CLI::App* app, const std::string& names, const std::string& pointer,
              const std::string& help) {
    app->add_option_function<T>(
        names, [this, pointer](const T& v) { overlay_[Json::json_pointer(pointer)] = v; }, help);
  }

  void flag(CLI::App* app, const std::string& names, const std::string& pointer, bool value,
            const std::string& help) {
    app->add_flag_function(
        names, [this, pointer, value](std::int64_t) { overlay_[Json::json_pointer(pointer)] = value; },
        help);
  }

  const Json& overlay() const { return overlay_; }

 private:
  Json overlay_ = Json::object();
};

void add_run_options(CLI::App* app, Overrides& o, std::string& config_path, bool& print_config) {
  app->add_option("-c,--config", config_path, "JSON run config (a manifest.json also works)");
  app->add_flag("--print-config", print_config, "Print the resolved config and exit");
  o.option<std::string>(app, "-o,--output-dir", "/output_dir", "Output directory");
  o.option<std::string>(app, "--questions", "/questions", "Questions JSONL (id, text, gold_answer)");
  o.option<std::string>(app, "--input", "/input", "Input JSONL (sequences or records)");
  o.option<std::string>(app, "--labels", "/labels", "Correctness labels JSONL");
  o.option<std::int64_t>(app, "--seed", "/seed", "Global sampling seed");
  o.option<int>(app, "--workers", "/workers", "Questions processed in parallel");

  o.option<std::string>(app, "--backend", "/backend/kind", "simulated | http");
  o.option<std::string>(app, "--world", "/backend/world", "Simulated world JSON");
  o.option<std::string>(app, "--synth-kind", "/backend/synth/kind", "Synthesized world: shop | walk");
  o.option<int>(app, "--synth-questions", "/backend/synth/questions", "Synthesized world size");
  o.option<std::uint64_t>(app, "--synth-seed", "/backend/synth/seed", "Synthesized world seed");
  o.option<int>(app, "--synth-steps", "/backend/synth/steps", "Steps per synthesized answer");
  o.option<int>(app, "--synth-spp", "/backend/synth/sentences_per_paragraph",
                "Sentences per paragraph in synthesized answers");
  o.option<std::string>(app, "--endpoint", "/backend/endpoint_url", "Chat-completions URL");
  o.option<std::string>(app, "--model", "/backend/model", "Model name sent to the endpoint");
  o.option<std::string>(app, "--api-key-env", "/backend/api_key_env",
                        "Environment variable holding the auth token");
  o.option<int>(app, "--max-in-flight", "/backend/max_in_flight", "Concurrent HTTP requests");
  o.option<int>(app, "--timeout-ms", "/backend/timeout_ms", "HTTP timeout");
  o.option<int>(app, "--max-attempts", "/backend/max_attempts", "HTTP attempts per request");
  o.option<int>(app, "--backoff-ms", "/backend/backoff_ms", "Initial retry backoff");
  o.flag(app, "--no-logprobs", "/backend/logprobs", false, "Endpoint cannot return logprobs");

  o.option<int>(app, "-k,--k", "/sampling/k", "Samples per sequence");
  o.option<double>(app, "--temperature", "/sampling/temperature", "Sampling temperature");
  o.option<double>(app, "--top-p", "/sampling/top_p", "Nucleus sampling mass");
  o.option<int>(app, "--max-tokens", "/sampling/max_tokens", "Tokens per continuation");
  o.option<int>(app, "--batch-size", "/sampling/batch_size", "Samples per generator call (0: all)");
  o.option<std::string>(app, "--matcher", "/sampling/matcher", "numeric | exact");

  o.option<int>(app, "-m,--m", "/pipeline/m", "Clusters per level");
  o.option<int>(app, "-T,--T", "/pipeline/T", "Truncation levels");
  o.option<std::string>(app, "--strategy", "/pipeline/strategy", "full_tree | clustered | linear");
  o.option<std::string>(app, "--truncation", "/pipeline/truncation_rule",
                        "sentence_fraction | paragraph_boundary");

  o.option<std::string>(app, "--positions", "/positions/strategy", "paragraph | periodic | entropy");
  o.option<int>(app, "--interval", "/positions/interval", "Tokens between periodic positions");
  o.option<double>(app, "--entropy-threshold", "/positions/entropy_threshold",
                   "Entropy below which a token is flagged");

  o.option<double>(app, "--alpha", "/bci/alpha", "Weight of the raw confidence");
  o.option<int>(app, "-w,--width", "/bci/width", "Continuations per node");
  o.option<int>(app, "-d,--depth", "/bci/depth", "Positions looked ahead");
  o.flag(app, "--path-mode", "/bci/path_mode", true, "Follow each continuation as a single path");

  o.option<std::string>(app, "--mode", "/estimate/mode", "sequence | generate");
  o.option<int>(app, "--num-bins", "/metrics/num_bins", "Reliability bins");
  o.option<std::vector<double>>(app, "--thresholds", "/metrics/thresholds", "Selective thresholds");
  o.option<std::string>(app, "--confidence", "/metrics/confidence", "auto | raw | adjusted");
}

RunConfig resolve(const std::string& config_path, const Json& overlay) {
  Json base = Json::object();
  if (!config_path.empty()) {
    base = read_json_file(config_path);
    if (base.is_object() && base.contains("config_hash") && base.contains("config"))
      base = Json(base.at("config"));
    if (!base.is_object()) throw ConfigError(config_path + ": config must be a JSON object");
  }
  base.merge_patch(overlay);
  return config_from_json(base);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fine-grained confidence estimation for LLM answers"};
  app.name("finece");
  app.require_subcommand(1);

  struct RunCommand {
    CLI::App* app;
    Overrides overrides;
    std::string config_path;
    bool print_config = false;
    int (*fn)(const RunConfig&, std::ostream&, std::ostream&);
  };
  RunCommand commands[] = {
      {app.add_subcommand("construct", "Build answer trees and training data"), {}, {}, false, cmd_construct},
      {app.add_subcommand("estimate", "Confidence records for sequences"), {}, {}, false, cmd_estimate},
      {app.add_subcommand("evaluate", "Calibration metrics for records"), {}, {}, false, cmd_evaluate},
      {app.add_subcommand("cost", "Predicted inference counts per strategy"), {}, {}, false, cmd_cost},
  };
  for (auto& c : commands) add_run_options(c.app, c.overrides, c.config_path, c.print_config);

  WorldCommand world;
  auto* sim = app.add_subcommand("simulate-world", "Write a synthesized simulated world");
  sim->add_option("--kind", world.kind, "shop | walk")->capture_default_str();
  sim->add_option("--questions", world.options.questions, "Number of questions")->capture_default_str();
  sim->add_option("--seed", world.options.seed, "World seed")->capture_default_str();
  sim->add_option("--steps", world.options.steps, "Steps per answer")->capture_default_str();
  sim->add_option("--spp", world.options.sentences_per_paragraph, "Sentences per paragraph (shop)")
      ->capture_default_str();
  sim->add_option("-o,--world-out", world.world_out, "World JSON path (default: stdout)");
  sim->add_option("--questions-out", world.questions_out, "Also write the questions as JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (sim->parsed()) return cmd_simulate_world(world, out, err);
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      const RunConfig config = resolve(c.config_path, c.overrides.overlay());
      if (c.print_config) {
        out << to_json(config).dump(2) << "\n";
        return kOk;
      }
      return c.fn(config, out, err);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kInputError;
}

}  // namespace finece::cli
