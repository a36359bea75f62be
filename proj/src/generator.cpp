#include "finece/generator.hpp"

#include <cmath>
#include <limits>

namespace finece {

void GenerationConfig::validate() const {
  if (n <= 0) throw ArgumentError("n must be positive");
  if (!(temperature >= 0.0)) throw ArgumentError("temperature must be non-negative");
  if (n > 1 && temperature <= 0.0)
    throw ArgumentError("temperature must be > 0 when sampling more than one completion");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ArgumentError("top_p must be in (0, 1]");
  if (max_tokens <= 0) throw ArgumentError("max_tokens must be positive");
  if (top_logprobs_k < 0) throw ArgumentError("top_logprobs_k must be >= 0");
}

std::string Prompt::render() const {
  std::string out = "Question: " + question_text + "\nAnswer:";
  if (!answer_prefix.empty()) out = join_continuation(out, answer_prefix);
  return out;
}

CostLedger& CostLedger::operator+=(const CostLedger& other) {
  inference_count += other.inference_count;
  prompt_tokens += other.prompt_tokens;
  completion_tokens += other.completion_tokens;
  return *this;
}

std::vector<Completion> Generator::generate(const Prompt& prompt, const GenerationConfig& config) {
  return generate_batch(prompt, config).completions;
}

GeneratedBatch Generator::generate_batch(const Prompt& prompt, const GenerationConfig& config) {
  config.validate();
  if (prompt.question_text.empty() && prompt.answer_prefix.empty())
    throw ArgumentError("prompt is empty");
  if (config.request_logprobs && !supports_logprobs())
    throw UnsupportedCapability("backend does not return logprobs");
  GeneratedBatch batch = do_generate(prompt, config);
  if (batch.completions.size() != static_cast<std::size_t>(config.n))
    throw DecodeError("backend returned " + std::to_string(batch.completions.size()) +
                          " completions, expected " + std::to_string(config.n),
                      "");
  charge(prompt, batch.completions, batch.prompt_tokens);
  return batch;
}

Completion Generator::stream(const Prompt& prompt, const GenerationConfig& config,
                             const TokenSink& sink) {
  GenerationConfig one = config;
  one.n = 1;
  one.validate();
  if (one.request_logprobs && !supports_logprobs())
    throw UnsupportedCapability("backend does not return logprobs");
  Completion c = do_stream(prompt, one, sink);
  charge(prompt, {c}, std::nullopt);
  return c;
}

Completion Generator::do_stream(const Prompt& prompt, const GenerationConfig& config,
                                const TokenSink& sink) {
  GeneratedBatch batch = do_generate(prompt, config);
  if (batch.completions.empty()) throw DecodeError("backend returned no completion", "");
  Completion full = std::move(batch.completions.front());
  for (std::size_t i = 0; i < full.tokens.size(); ++i) {
    StreamedToken t;
    t.index = i;
    t.token = full.tokens[i];
    if (full.token_logprobs) t.logprob = (*full.token_logprobs)[i];
    if (full.top_logprobs) t.alternatives = &(*full.top_logprobs)[i];
    if (!sink(t)) {
      // Cut the replay at the stop point so the result reflects what was seen.
      Completion cut;
      cut.tokens.assign(full.tokens.begin(), full.tokens.begin() + static_cast<long>(i + 1));
      for (const auto& tok : cut.tokens) cut.text += tok;
      if (full.token_logprobs)
        cut.token_logprobs.emplace(full.token_logprobs->begin(),
                                   full.token_logprobs->begin() + static_cast<long>(i + 1));
      if (full.top_logprobs)
        cut.top_logprobs.emplace(full.top_logprobs->begin(),
                                 full.top_logprobs->begin() + static_cast<long>(i + 1));
      cut.finish_reason = FinishReason::Length;
      return cut;
    }
  }
  return full;
}

void Generator::charge(const Prompt& prompt, const std::vector<Completion>& completions,
                       std::optional<std::uint64_t> prompt_tokens) {
  std::uint64_t completion_tokens = 0;
  for (const auto& c : completions) completion_tokens += c.tokens.size();
  std::uint64_t ptoks = prompt_tokens ? *prompt_tokens : whitespace_tokenize(prompt.render()).size();
  std::lock_guard lock(ledger_mutex_);
  ledger_.inference_count += completions.size();
  ledger_.prompt_tokens += ptoks;
  ledger_.completion_tokens += completion_tokens;
}

CostLedger Generator::ledger() const {
  std::lock_guard lock(ledger_mutex_);
  return ledger_;
}

GeneratedBatch MeteredGenerator::do_generate(const Prompt& prompt, const GenerationConfig& config) {
  return inner_.generate_batch(prompt, config);
}

Completion MeteredGenerator::do_stream(const Prompt& prompt, const GenerationConfig& config,
                                       const TokenSink& sink) {
  return inner_.stream(prompt, config, sink);
}

double alternatives_entropy(const std::vector<TokenAlternative>& alternatives) {
  if (alternatives.empty()) throw UnsupportedCapability("no top-k alternatives at token");
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& a : alternatives) max_lp = std::max(max_lp, a.logprob);
  if (!std::isfinite(max_lp)) throw ArgumentError("all alternatives have zero probability");
  double z = 0.0;
  for (const auto& a : alternatives) z += std::exp(a.logprob - max_lp);
  double h = 0.0;
  for (const auto& a : alternatives) {
    double p = std::exp(a.logprob - max_lp) / z;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h > 0.0 ? h : 0.0;
}

double token_entropy(const Completion& completion, std::size_t index) {
  if (!completion.top_logprobs)
    throw UnsupportedCapability("completion carries no top logprobs; entropy is unavailable");
  if (index >= completion.top_logprobs->size()) throw ArgumentError("token index out of range");
  return alternatives_entropy((*completion.top_logprobs)[index]);
}

}  // namespace finece
