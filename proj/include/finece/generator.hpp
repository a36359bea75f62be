#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finece/core.hpp"

namespace finece {

struct GenerationConfig {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 512;
  std::optional<std::int64_t> seed;
  int n = 1;
  bool request_logprobs = false;
  int top_logprobs_k = 0;

  void validate() const;
};

// What the model is conditioned on. Backends render it however their wire
// format needs; the simulated backend reads the fields directly.
struct Prompt {
  std::string question_id;
  std::string question_text;
  std::string answer_prefix;

  // Plain-text rendering used for prompt-token accounting and hashing.
  std::string render() const;
};

struct CostLedger {
  std::uint64_t inference_count = 0;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;

  CostLedger& operator+=(const CostLedger& other);
  friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

// Receives each token as it is produced. Returning false stops generation.
struct StreamedToken {
  std::size_t index = 0;
  std::string_view token;
  std::optional<double> logprob;
  const std::vector<TokenAlternative>* alternatives = nullptr;
};
using TokenSink = std::function<bool(const StreamedToken&)>;

// Backend output for one call. prompt_tokens is filled by backends that learn
// the true count (service usage blocks); otherwise it is estimated.
struct GeneratedBatch {
  std::vector<Completion> completions;
  std::optional<std::uint64_t> prompt_tokens;
};

class Generator {
 public:
  virtual ~Generator() = default;

  // Exactly config.n completions. Every completion is charged to the ledger.
  std::vector<Completion> generate(const Prompt& prompt, const GenerationConfig& config);
  // Same as generate, keeping the backend's prompt-token figure.
  GeneratedBatch generate_batch(const Prompt& prompt, const GenerationConfig& config);

  // One completion delivered token by token; the sink may stop it early
  // (the result then has finish_reason Length).
  Completion stream(const Prompt& prompt, const GenerationConfig& config, const TokenSink& sink);

  virtual bool supports_logprobs() const = 0;

  CostLedger ledger() const;

 protected:
  virtual GeneratedBatch do_generate(const Prompt& prompt, const GenerationConfig& config) = 0;
  // Default replays a finished completion through the sink.
  virtual Completion do_stream(const Prompt& prompt, const GenerationConfig& config,
                               const TokenSink& sink);

 private:
  void charge(const Prompt& prompt, const std::vector<Completion>& completions,
              std::optional<std::uint64_t> prompt_tokens);

  mutable std::mutex ledger_mutex_;
  CostLedger ledger_;
};

// Counts everything routed through it into a private ledger while forwarding
// to a shared backend. One per question keeps per-question costs exact even
// when the backend serves several workers.
class MeteredGenerator : public Generator {
 public:
  explicit MeteredGenerator(Generator& inner) : inner_(inner) {}
  bool supports_logprobs() const override { return inner_.supports_logprobs(); }

 protected:
  GeneratedBatch do_generate(const Prompt& prompt, const GenerationConfig& config) override;
  Completion do_stream(const Prompt& prompt, const GenerationConfig& config,
                       const TokenSink& sink) override;

 private:
  Generator& inner_;
};

// Shannon entropy (nats) of the renormalised top-k alternatives at a token.
double token_entropy(const Completion& completion, std::size_t index);
double alternatives_entropy(const std::vector<TokenAlternative>& alternatives);

}  // namespace finece
