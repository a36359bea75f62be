#include "finece/http_generator.hpp"

#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace finece {

namespace {

using json = nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: '" + url + "'");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (e.origin.size() <= scheme_end + 3) throw ConfigError("endpoint_url has no host: '" + url + "'");
  return e;
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 300;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

FinishReason finish_from(const json& choice) {
  if (!choice.contains("finish_reason") || choice["finish_reason"].is_null()) return FinishReason::Stop;
  return parse_finish_reason(choice["finish_reason"].get<std::string>());
}

Completion decode_choice(const json& choice, bool want_logprobs, bool want_top,
                         const std::string& body) {
  try {
    Completion c;
    const json& msg = choice.at("message");
    c.text = msg.contains("content") && !msg["content"].is_null() ? msg["content"].get<std::string>()
                                                                  : std::string();
    c.finish_reason = finish_from(choice);
    const json* lp = choice.contains("logprobs") && !choice["logprobs"].is_null()
                         ? &choice["logprobs"]
                         : nullptr;
    if (want_logprobs && lp && lp->contains("content") && (*lp)["content"].is_array()) {
      std::vector<std::string> tokens;
      std::vector<double> logprobs;
      std::vector<std::vector<TokenAlternative>> tops;
      std::string spelled;
      for (const auto& t : (*lp)["content"]) {
        tokens.push_back(t.at("token").get<std::string>());
        spelled += tokens.back();
        logprobs.push_back(std::min(0.0, t.at("logprob").get<double>()));
        std::vector<TokenAlternative> alts;
        if (t.contains("top_logprobs") && t["top_logprobs"].is_array())
          for (const auto& a : t["top_logprobs"])
            alts.push_back({a.at("token").get<std::string>(), std::min(0.0, a.at("logprob").get<double>())});
        tops.push_back(std::move(alts));
      }
      if (spelled != c.text)
        throw DecodeError("logprob tokens do not spell the message content", excerpt(body));
      c.tokens = std::move(tokens);
      c.token_logprobs = std::move(logprobs);
      if (want_top) c.top_logprobs = std::move(tops);
    } else {
      if (want_logprobs) throw DecodeError("response carries no logprobs", excerpt(body));
      c.tokens = whitespace_tokenize(c.text);
    }
    return c;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed choice: ") + e.what(), excerpt(body));
  }
}

}  // namespace

void HttpGeneratorConfig::validate() const {
  if (endpoint_url.empty()) throw ConfigError("endpoint_url is required for the http backend");
  split_url(endpoint_url);
  if (model.empty()) throw ConfigError("model is required for the http backend");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (backoff_ms < 0) throw ConfigError("backoff_ms must be >= 0");
}

std::string api_key_from_env(const std::string& variable) {
  if (variable.empty()) return {};
  const char* v = std::getenv(variable.c_str());
  return v ? std::string(v) : std::string();
}

struct HttpGenerator::Impl {
  explicit Impl(int cap) : slots(cap) {}
  std::counting_semaphore<> slots;
  Endpoint endpoint;
};

HttpGenerator::HttpGenerator(HttpGeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  impl_ = std::make_unique<Impl>(config_.max_in_flight);
  impl_->endpoint = split_url(config_.endpoint_url);
}

HttpGenerator::~HttpGenerator() = default;

GeneratedBatch HttpGenerator::do_generate(const Prompt& prompt, const GenerationConfig& gc) {
  json messages = json::array();
  if (!config_.system_prompt.empty())
    messages.push_back({{"role", "system"}, {"content", config_.system_prompt}});
  std::string user = prompt.question_text;
  if (!config_.instruction.empty()) user += "\n\n" + config_.instruction;
  messages.push_back({{"role", "user"}, {"content", user}});
  const bool prefill = !prompt.answer_prefix.empty();
  if (prefill) messages.push_back({{"role", "assistant"}, {"content", prompt.answer_prefix}});

  const bool want_top = gc.request_logprobs && gc.top_logprobs_k > 0;
  GeneratedBatch batch;
  std::uint64_t prompt_tokens = 0;
  bool usage_seen = false;

  while (static_cast<int>(batch.completions.size()) < gc.n) {
    const int want = gc.n - static_cast<int>(batch.completions.size());
    json req{{"model", config_.model},
             {"messages", messages},
             {"temperature", gc.temperature},
             {"top_p", gc.top_p},
             {"max_tokens", gc.max_tokens},
             {"n", want}};
    if (gc.seed) req["seed"] = *gc.seed;
    if (gc.request_logprobs) req["logprobs"] = true;
    if (want_top) req["top_logprobs"] = gc.top_logprobs_k;
    if (prefill) {
      req["continue_final_message"] = true;
      req["add_generation_prompt"] = false;
    }
    const std::string payload = req.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string body;
    int backoff = config_.backoff_ms;
    for (int attempt = 1;; ++attempt) {
      std::string failure;
      bool retriable = true;
      {
        struct Slot {
          std::counting_semaphore<>& s;
          explicit Slot(std::counting_semaphore<>& sem) : s(sem) { s.acquire(); }
          ~Slot() { s.release(); }
        } slot(impl_->slots);
        httplib::Client client(impl_->endpoint.origin);
        auto timeout = std::chrono::milliseconds(config_.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto res = client.Post(impl_->endpoint.path, headers, payload, "application/json");
        if (!res) {
          failure = "request failed: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
          body = res->body;
          break;
        } else {
          failure = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
          retriable = res->status == 429 || res->status >= 500;
        }
      }
      if (!retriable || attempt >= config_.max_attempts)
        throw TransportError(failure + " (after " + std::to_string(attempt) + " attempt" +
                                 (attempt == 1 ? "" : "s") + ")",
                             attempt);
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }

    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error&) {
      throw DecodeError("response is not JSON", excerpt(body));
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
      throw DecodeError("response has no choices", excerpt(body));
    for (const auto& choice : doc["choices"]) {
      if (static_cast<int>(batch.completions.size()) >= gc.n) break;
      batch.completions.push_back(decode_choice(choice, gc.request_logprobs, want_top, body));
    }
    if (doc.contains("usage") && doc["usage"].contains("prompt_tokens") &&
        doc["usage"]["prompt_tokens"].is_number_unsigned()) {
      prompt_tokens += doc["usage"]["prompt_tokens"].get<std::uint64_t>();
      usage_seen = true;
    }
  }
  if (usage_seen) batch.prompt_tokens = prompt_tokens;
  return batch;
}

}  // namespace finece
