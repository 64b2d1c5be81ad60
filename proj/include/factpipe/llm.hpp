#pragma once

// Provider-agnostic chat-completion access. One chat call is one agent step;
// no conversation history is carried. Backends must be callable from
// concurrent pipeline tasks; rate limiting is a shared token bucket owned by
// the gateway.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>

#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/prompts.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

struct ChatRequest {
  std::string model_id;
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
  // Template name + hash of (body, bindings); keys mock scripts and fixtures.
  std::string fingerprint;
};

struct BackoffSchedule {
  std::chrono::milliseconds initial{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max{4000};

  std::chrono::milliseconds delay(int attempt) const {
    double ms = static_cast<double>(initial.count());
    for (int i = 0; i < attempt; ++i) ms *= multiplier;
    ms = std::min(ms, static_cast<double>(max.count()));
    return std::chrono::milliseconds(static_cast<long long>(ms));
  }
};

struct LlmBackendConfig {
  std::string endpoint_url;
  std::string api_key_env_var = "LLM_API_KEY";
  std::string model_id = "gpt-4o-mini";
  int retry_limit = 2;
  BackoffSchedule backoff;
};

inline void to_json(Json& j, const LlmBackendConfig& c) {
  j = Json{{"endpoint_url", c.endpoint_url},
           {"api_key_env_var", c.api_key_env_var},
           {"model_id", c.model_id},
           {"retry_limit", c.retry_limit},
           {"backoff_initial_ms", c.backoff.initial.count()},
           {"backoff_multiplier", c.backoff.multiplier},
           {"backoff_max_ms", c.backoff.max.count()}};
}

inline void from_json(const Json& j, LlmBackendConfig& c) {
  c = LlmBackendConfig{};
  if (j.contains("endpoint_url")) j["endpoint_url"].get_to(c.endpoint_url);
  if (j.contains("api_key_env_var")) j["api_key_env_var"].get_to(c.api_key_env_var);
  if (j.contains("model_id")) j["model_id"].get_to(c.model_id);
  if (j.contains("retry_limit")) j["retry_limit"].get_to(c.retry_limit);
  if (j.contains("backoff_initial_ms"))
    c.backoff.initial = std::chrono::milliseconds(j["backoff_initial_ms"].get<long long>());
  if (j.contains("backoff_multiplier")) j["backoff_multiplier"].get_to(c.backoff.multiplier);
  if (j.contains("backoff_max_ms"))
    c.backoff.max = std::chrono::milliseconds(j["backoff_max_ms"].get<long long>());
}

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string model_id() const { return "mock"; }
};

// Shared token bucket. capacity <= 0 disables limiting.
class TokenBucket {
 public:
  TokenBucket(double capacity, double refill_per_second)
      : capacity_(capacity),
        refill_per_second_(refill_per_second),
        tokens_(capacity),
        last_refill_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (capacity_ <= 0) return;
    std::unique_lock lock(mutex_);
    refill();
    while (tokens_ < 1.0) {
      lock.unlock();
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      lock.lock();
      refill();
    }
    tokens_ -= 1.0;
  }

  bool try_acquire() {
    if (capacity_ <= 0) return true;
    std::lock_guard lock(mutex_);
    refill();
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
  }

 private:
  void refill() {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_refill_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
    last_refill_ = now;
  }

  double capacity_;
  double refill_per_second_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
  std::mutex mutex_;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path or /
};

inline SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL missing scheme: " + url);
  auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

inline const char* env_or_null(const std::string& name) {
  return name.empty() ? nullptr : std::getenv(name.c_str());
}

}  // namespace detail

// OpenAI-style chat-completion endpoint over HTTP(S). The API key is read
// from the environment at call time and never stored. Transient transport
// failures are retried up to retry_limit with the configured backoff.
class HttpLlmBackend : public LlmBackend {
 public:
  explicit HttpLlmBackend(LlmBackendConfig config) : config_(std::move(config)) {}

  std::string model_id() const override { return config_.model_id; }

  std::string complete(const ChatRequest& request) override {
    if (request.user.empty()) throw Error("chat request has empty user prompt");
    int attempt = 0;
    while (true) {
      try {
        return complete_once(request);
      } catch (const AuthFailure&) {
        throw;
      } catch (const TransportError&) {
        if (attempt >= config_.retry_limit) throw;
        std::this_thread::sleep_for(config_.backoff.delay(attempt));
        ++attempt;
      }
    }
  }

 private:
  std::string complete_once(const ChatRequest& request) const {
    std::string endpoint = config_.endpoint_url;
    if (const char* override_url = std::getenv("FACTPIPE_LLM_ENDPOINT")) {
      if (*override_url) endpoint = override_url;
    }
    auto [origin, path] = detail::split_url(endpoint);

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(request.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(request.timeout));

    httplib::Headers headers;
    if (const char* key = detail::env_or_null(config_.api_key_env_var)) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    Json payload;
    payload["model"] = request.model_id.empty() ? config_.model_id : request.model_id;
    Json messages = Json::array();
    if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    payload["messages"] = messages;
    payload["temperature"] = request.temperature;
    payload["max_tokens"] = request.max_tokens;

    auto result = client.Post(path, headers, payload.dump(), "application/json");
    if (!result) {
      auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write) {
        throw Timeout("llm endpoint timed out: " + httplib::to_string(err));
      }
      throw TransportError("llm endpoint unreachable: " + httplib::to_string(err));
    }
    if (result->status == 401 || result->status == 403) {
      throw AuthFailure("llm endpoint rejected credentials (HTTP " +
                        std::to_string(result->status) + ")");
    }
    if (result->status == 429) throw RateLimited("llm endpoint rate limited (HTTP 429)");
    if (result->status == 408 || result->status == 504) {
      throw Timeout("llm endpoint timed out (HTTP " + std::to_string(result->status) + ")");
    }
    if (result->status >= 400) {
      throw TransportError("llm endpoint error (HTTP " + std::to_string(result->status) + ")");
    }

    Json body = Json::parse(result->body, nullptr, false);
    if (body.is_discarded() || !body.contains("choices") || body["choices"].empty() ||
        !body["choices"][0].contains("message")) {
      throw TransportError("llm endpoint returned an unexpected body");
    }
    return body["choices"][0]["message"].value("content", std::string{});
  }

  LlmBackendConfig config_;
};

// Deterministic scripted backend: identical request => identical reply,
// unknown fingerprint => MockMiss. Also logs calls so tests can assert which
// stages ran.
class MockLlmBackend : public LlmBackend {
 public:
  MockLlmBackend() = default;
  explicit MockLlmBackend(std::map<std::string, std::string> script) : script_(std::move(script)) {}

  static std::shared_ptr<MockLlmBackend> from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StorageError("cannot open mock script: " + path);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw StorageError("mock script is not a JSON object: " + path);
    }
    std::map<std::string, std::string> script;
    for (auto& [key, value] : j.items()) script[key] = value.get<std::string>();
    return std::make_shared<MockLlmBackend>(std::move(script));
  }

  void add(const std::string& fingerprint, std::string reply) {
    std::lock_guard lock(mutex_);
    script_[fingerprint] = std::move(reply);
  }

  void save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    Json j = Json::object();
    for (const auto& [key, value] : script_) j[key] = value;
    std::ofstream out(path);
    if (!out) throw StorageError("cannot write mock script: " + path);
    out << j.dump(2) << '\n';
  }

  std::string complete(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    calls_.push_back(request.fingerprint);
    auto it = script_.find(request.fingerprint);
    if (it == script_.end()) {
      throw MockMiss("no scripted reply for fingerprint " + request.fingerprint +
                     " (stale fixture after a prompt edit?)");
    }
    return it->second;
  }

  std::vector<std::string> calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }

  std::size_t call_count() const {
    std::lock_guard lock(mutex_);
    return calls_.size();
  }

 private:
  std::map<std::string, std::string> script_;
  mutable std::mutex mutex_;
  std::vector<std::string> calls_;
};

// Wraps a live backend and captures every (fingerprint, reply) pair in the
// mock-script format, so recorded runs replay offline.
class RecordingLlmBackend : public LlmBackend {
 public:
  explicit RecordingLlmBackend(std::shared_ptr<LlmBackend> inner) : inner_(std::move(inner)) {}

  std::string model_id() const override { return inner_->model_id(); }

  std::string complete(const ChatRequest& request) override {
    std::string reply = inner_->complete(request);
    std::lock_guard lock(mutex_);
    script_[request.fingerprint] = reply;
    return reply;
  }

  void save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    Json j = Json::object();
    for (const auto& [key, value] : script_) j[key] = value;
    std::ofstream out(path);
    if (!out) throw StorageError("cannot write mock script: " + path);
    out << j.dump(2) << '\n';
  }

 private:
  std::shared_ptr<LlmBackend> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> script_;
};

// Stable fixture key: template name, plus a hash over the template body and
// the bindings. Editing a prompt or a binding changes the key, so stale
// fixtures fail loudly instead of replaying silently.
inline std::string make_fingerprint(TemplateId id, const Bindings& bindings) {
  std::string material(get_template(id).body);
  material += '\x1e';
  for (const auto& [key, value] : bindings) {
    material += key;
    material += '\x1f';
    material += value;
    material += '\x1f';
  }
  return to_string(id) + ":" + fnv1a64_hex(material);
}

// Renders templates and routes each agent step to its assigned backend.
class LlmGateway {
 public:
  LlmGateway() = default;
  explicit LlmGateway(std::shared_ptr<LlmBackend> default_backend)
      : default_backend_(std::move(default_backend)) {}

  void set_default_backend(std::shared_ptr<LlmBackend> backend) {
    default_backend_ = std::move(backend);
  }

  void set_backend(TemplateId id, std::shared_ptr<LlmBackend> backend) {
    overrides_[id] = std::move(backend);
  }

  void set_rate_limiter(std::shared_ptr<TokenBucket> limiter) { limiter_ = std::move(limiter); }

  void set_max_tokens(int max_tokens) { max_tokens_ = max_tokens; }
  void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }

  std::shared_ptr<LlmBackend> backend_for(TemplateId id) const {
    auto it = overrides_.find(id);
    if (it != overrides_.end()) return it->second;
    if (!default_backend_) throw ConfigError("no LLM backend configured");
    return default_backend_;
  }

  std::string run(TemplateId id, const Bindings& bindings) const {
    auto backend = backend_for(id);
    ChatRequest request;
    request.user = render(id, bindings);
    request.model_id = backend->model_id();
    request.max_tokens = max_tokens_;
    request.timeout = timeout_;
    request.fingerprint = make_fingerprint(id, bindings);
    if (limiter_) limiter_->acquire();
    return backend->complete(request);
  }

 private:
  std::shared_ptr<LlmBackend> default_backend_;
  std::map<TemplateId, std::shared_ptr<LlmBackend>> overrides_;
  std::shared_ptr<TokenBucket> limiter_;
  int max_tokens_ = 1024;
  std::chrono::milliseconds timeout_{60000};
};

}  // namespace factpipe
