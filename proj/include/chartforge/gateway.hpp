#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "chartforge/clock.hpp"
#include "chartforge/prompt.hpp"
#include "json.hpp"

namespace chartforge::llm {

struct Decoding {
  double temperature = 0.7;
  int max_tokens = 2048;
  std::uint64_t seed = 0;
};

struct ChatRequest {
  std::string template_id;
  Bindings bindings;
  Decoding decoding;
  std::string backend_tag;

  // Throws ContractError unless max_tokens > 0 and temperature >= 0.
  void validate() const;
};

// SHA-256 over the canonical JSON of (template_id, bindings, decoding,
// backend_tag). Stable across processes and platforms.
std::string request_hash(const ChatRequest& request);

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

struct BackendReply {
  std::string text;
  std::string finish_reason = "stop";
  Usage usage;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason;
  Usage usage;
  bool cache_hit = false;
  std::string request_hash;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // May throw TransportError (retried by the gateway) or any other Error.
  virtual BackendReply generate(const ChatRequest& request, const std::string& prompt) = 0;
};

// Deterministic in-process backend driven by a responder function. The
// responder must be a pure function of its inputs for runs to be
// reproducible under concurrency.
class ScriptedBackend final : public Backend {
 public:
  using Responder = std::function<std::string(const ChatRequest&, const std::string& prompt)>;
  explicit ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}
  static std::shared_ptr<ScriptedBackend> fixed(std::string text);

  BackendReply generate(const ChatRequest& request, const std::string& prompt) override;
  std::size_t calls() const;

 private:
  Responder responder_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// Chat-completion over HTTP(S): POST {model, messages:[{role:user,
// content}], temperature, max_tokens, seed} and read
// choices[0].message.content.
// Splits scheme://host[:port]/path into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& url);

struct HttpBackendOptions {
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string api_key_env = "CHARTFORGE_API_KEY";
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  double timeout_seconds = 120.0;
};

class HttpChatBackend final : public Backend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options);
  BackendReply generate(const ChatRequest& request, const std::string& prompt) override;

 private:
  HttpBackendOptions options_;
  std::string base_;
  std::string path_;
};

// Content-addressed store: one <request_hash>.json per response. Entries are
// written once via rename and never overwritten.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);
  std::optional<BackendReply> get(const std::string& hash) const;
  // Returns false when the entry already existed.
  bool put(const std::string& hash, const ChatRequest& request, const BackendReply& reply);
  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
};

// At most max_requests acquisitions in any window of the given length.
class RateLimiter {
 public:
  RateLimiter(std::size_t max_requests, Clock::duration window, Clock& clock);
  void acquire();

 private:
  std::size_t max_requests_;
  Clock::duration window_;
  Clock& clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> stamps_;
};

class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t limit) : limit_(limit == 0 ? 1 : limit) {}
  void acquire();
  void release();
  std::size_t peak() const;

 private:
  std::size_t limit_;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

enum class GatewayMode {
  Live,    // cache hits served, misses go to the backend and are recorded
  Replay,  // cache only; a miss is a CacheMissError
};

GatewayMode parse_gateway_mode(std::string_view s);

struct GatewayOptions {
  GatewayMode mode = GatewayMode::Live;
  std::size_t max_in_flight = 4;
  std::size_t rate_limit_requests = 0;  // 0 disables rate limiting
  double rate_limit_window_seconds = 60.0;
  int max_retries = 3;
  double backoff_base_seconds = 0.5;
  double backoff_cap_seconds = 8.0;
};

class Gateway {
 public:
  Gateway(PromptLibrary prompts, std::shared_ptr<Backend> backend,
          std::shared_ptr<ResponseCache> cache, GatewayOptions options,
          Clock& clock = default_clock());

  ChatResponse complete(const ChatRequest& request);
  std::string render(const ChatRequest& request) const;

  const PromptLibrary& prompts() const { return prompts_; }
  std::size_t backend_calls() const;
  std::size_t peak_in_flight() const { return in_flight_.peak(); }

 private:
  BackendReply call_with_retries(const ChatRequest& request, const std::string& prompt);

  PromptLibrary prompts_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  GatewayOptions options_;
  Clock& clock_;
  InFlightLimiter in_flight_;
  std::optional<RateLimiter> rate_;
  mutable std::mutex stats_mu_;
  std::size_t backend_calls_ = 0;
};

}  // namespace chartforge::llm
