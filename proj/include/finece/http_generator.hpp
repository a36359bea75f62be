#pragma once

// Client for chat-completions style inference services.
//
// The question goes in a user message; a non-empty answer prefix is sent as a
// trailing assistant message that the service is asked to continue
// ("continue_final_message"). Requests that come back with fewer choices than
// asked for are topped up with further requests.

#include <chrono>
#include <memory>
#include <string>

#include "finece/generator.hpp"

namespace finece {

struct HttpGeneratorConfig {
  std::string endpoint_url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;  // empty -> no Authorization header
  int max_in_flight = 8;
  int timeout_ms = 60000;
  int max_attempts = 3;
  int backoff_ms = 500;  // doubled after every failed attempt
  bool logprobs_supported = true;
  std::string system_prompt;
  std::string instruction = "Solve the problem step by step and finish with \"The answer is X.\"";

  void validate() const;
};

// Reads the auth token from the named environment variable (empty if unset).
std::string api_key_from_env(const std::string& variable);

class HttpGenerator : public Generator {
 public:
  explicit HttpGenerator(HttpGeneratorConfig config);
  ~HttpGenerator() override;

  bool supports_logprobs() const override { return config_.logprobs_supported; }
  const HttpGeneratorConfig& config() const noexcept { return config_; }

 protected:
  GeneratedBatch do_generate(const Prompt& prompt, const GenerationConfig& config) override;

 private:
  struct Impl;
  HttpGeneratorConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace finece
