#pragma once

// Batch commands behind the `finece` executable. Each command takes a fully
// resolved RunConfig, writes its outputs plus a manifest.json into the output
// directory and returns a process exit code:
//   0 success, 1 input error, 2 backend failure, 3 capability mismatch.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finece/bci.hpp"
#include "finece/http_generator.hpp"
#include "finece/io.hpp"
#include "finece/mcsampler.hpp"
#include "finece/pipeline.hpp"
#include "finece/positions.hpp"
#include "finece/simulated.hpp"

namespace finece::cli {

enum ExitCode { kOk = 0, kInputError = 1, kBackendFailure = 2, kCapabilityMismatch = 3 };

struct BackendSettings {
  std::string kind = "simulated";  // simulated | http
  // simulated
  std::string world_path;          // empty -> synthesize
  std::string synth_kind = "shop";  // shop | walk
  WorldSynthesisOptions synth;
  // http
  HttpGeneratorConfig http;
  std::string api_key_env = "FINECE_API_KEY";
};

struct RunConfig {
  BackendSettings backend;
  SamplingPlan sampling;
  PipelineParams pipeline;  // k is taken from sampling
  PositionStrategy positions;
  BciParams bci;
  std::string estimate_mode = "sequence";  // sequence | generate
  int num_bins = 10;
  std::vector<double> thresholds{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::string confidence_field = "auto";  // auto | raw | adjusted
  std::string questions_path;
  std::string input_path;
  std::string labels_path;
  std::string output_dir = "finece_out";
  std::optional<std::int64_t> seed;
  int workers = 1;

  // Range checks for everything; runs before any generator call.
  void validate() const;
};

Json to_json(const RunConfig& config);
// Missing keys take defaults; unknown keys are rejected. Accepts a manifest
// too, in which case its embedded config is used.
RunConfig config_from_json(const Json& j);
// FNV-1a over the canonical config JSON without output_dir, as 16 hex digits.
std::string config_hash(const RunConfig& config);

std::unique_ptr<Generator> make_backend(const RunConfig& config);
int exit_code_for(const std::exception& e);

int cmd_construct(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_estimate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_cost(const RunConfig& config, std::ostream& out, std::ostream& err);

struct WorldCommand {
  std::string kind = "shop";
  WorldSynthesisOptions options;
  std::string world_out;      // empty -> stdout
  std::string questions_out;  // optional questions JSONL
};
int cmd_simulate_world(const WorldCommand& command, std::ostream& out, std::ostream& err);

// Parses argv (subcommand, --config file, flag overrides) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace finece::cli
