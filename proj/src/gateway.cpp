#include "chartforge/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chartforge/error.hpp"
#include "chartforge/hashing.hpp"

namespace chartforge {

Clock& default_clock() {
  static SteadyClock clock;
  return clock;
}

}  // namespace chartforge

namespace chartforge::llm {

using nlohmann::json;

void ChatRequest::validate() const {
  if (decoding.max_tokens <= 0) throw ContractError("max_tokens must be > 0");
  if (!(decoding.temperature >= 0.0)) throw ContractError("temperature must be >= 0");
  if (template_id.empty()) throw ContractError("template_id is empty");
}

std::string request_hash(const ChatRequest& r) {
  // std::map-backed json sorts keys, so dump() is canonical.
  json j;
  j["template_id"] = r.template_id;
  j["bindings"] = r.bindings;
  j["decoding"] = {{"temperature", r.decoding.temperature},
                   {"max_tokens", r.decoding.max_tokens},
                   {"seed", r.decoding.seed}};
  j["backend_tag"] = r.backend_tag;
  return sha256_hex(j.dump());
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::fixed(std::string text) {
  return std::make_shared<ScriptedBackend>(
      [text = std::move(text)](const ChatRequest&, const std::string&) { return text; });
}

BackendReply ScriptedBackend::generate(const ChatRequest& request, const std::string& prompt) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  BackendReply reply;
  reply.text = responder_(request, prompt);
  reply.usage.prompt_tokens = prompt.size() / 4;
  reply.usage.completion_tokens = reply.text.size() / 4;
  return reply;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<BackendReply> ResponseCache::get(const std::string& hash) const {
  std::shared_lock lock(mu_);
  std::ifstream in(dir_ / (hash + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("corrupt cache entry " + hash + ": " + e.what(), 1);
  }
  BackendReply r;
  r.text = j.at("text").get<std::string>();
  r.finish_reason = j.value("finish_reason", "stop");
  if (auto u = j.find("usage"); u != j.end()) {
    r.usage.prompt_tokens = u->value("prompt_tokens", 0ull);
    r.usage.completion_tokens = u->value("completion_tokens", 0ull);
  }
  return r;
}

bool ResponseCache::put(const std::string& hash, const ChatRequest& request,
                        const BackendReply& reply) {
  std::unique_lock lock(mu_);
  const auto final_path = dir_ / (hash + ".json");
  if (std::filesystem::exists(final_path)) return false;
  json j;
  j["request_hash"] = hash;
  j["template_id"] = request.template_id;
  j["backend_tag"] = request.backend_tag;
  j["text"] = reply.text;
  j["finish_reason"] = reply.finish_reason;
  j["usage"] = {{"prompt_tokens", reply.usage.prompt_tokens},
                {"completion_tokens", reply.usage.completion_tokens}};
  const auto tmp = dir_ / (hash + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, final_path);
  return true;
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    n += e.path().extension() == ".json";
  }
  return n;
}

RateLimiter::RateLimiter(std::size_t max_requests, Clock::duration window, Clock& clock)
    : max_requests_(max_requests), window_(window), clock_(clock) {
  if (max_requests_ == 0) throw ContractError("rate limit must allow at least one request");
}

void RateLimiter::acquire() {
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = clock_.now();
    while (!stamps_.empty() && stamps_.front() + window_ <= now) stamps_.pop_front();
    if (stamps_.size() < max_requests_) {
      stamps_.push_back(now);
      return;
    }
    const auto wake = stamps_.front() + window_;
    lock.unlock();
    clock_.sleep_until(wake);
    lock.lock();
  }
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
  peak_ = std::max(peak_, active_);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

std::size_t InFlightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

GatewayMode parse_gateway_mode(std::string_view s) {
  if (s == "live") return GatewayMode::Live;
  if (s == "replay") return GatewayMode::Replay;
  throw ConfigError("unknown gateway mode '" + std::string(s) + "' (expected live|replay)");
}

Gateway::Gateway(PromptLibrary prompts, std::shared_ptr<Backend> backend,
                 std::shared_ptr<ResponseCache> cache, GatewayOptions options, Clock& clock)
    : prompts_(std::move(prompts)),
      backend_(std::move(backend)),
      cache_(std::move(cache)),
      options_(options),
      clock_(clock),
      in_flight_(options.max_in_flight) {
  if (options_.mode == GatewayMode::Replay && !cache_) {
    throw ConfigError("replay mode requires a response cache");
  }
  if (options_.mode == GatewayMode::Live && !backend_) {
    throw ConfigError("live mode requires a backend");
  }
  if (options_.rate_limit_requests > 0) {
    rate_.emplace(options_.rate_limit_requests,
                  std::chrono::duration_cast<Clock::duration>(
                      std::chrono::duration<double>(options_.rate_limit_window_seconds)),
                  clock_);
  }
}

std::string Gateway::render(const ChatRequest& request) const {
  return prompts_.render(request.template_id, request.bindings);
}

std::size_t Gateway::backend_calls() const {
  std::lock_guard lock(stats_mu_);
  return backend_calls_;
}

BackendReply Gateway::call_with_retries(const ChatRequest& request, const std::string& prompt) {
  for (int attempt = 0;; ++attempt) {
    try {
      if (rate_) rate_->acquire();
      {
        std::lock_guard lock(stats_mu_);
        ++backend_calls_;
      }
      return backend_->generate(request, prompt);
    } catch (const TransportError&) {
      if (attempt >= options_.max_retries) throw;
      const double delay = std::min(options_.backoff_cap_seconds,
                                    options_.backoff_base_seconds * std::pow(2.0, attempt));
      clock_.sleep_for(std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(delay)));
    }
  }
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  request.validate();
  const auto prompt = render(request);
  ChatResponse out;
  out.request_hash = request_hash(request);

  if (cache_) {
    if (auto hit = cache_->get(out.request_hash)) {
      out.text = std::move(hit->text);
      out.finish_reason = std::move(hit->finish_reason);
      out.usage = hit->usage;
      out.cache_hit = true;
      return out;
    }
  }
  if (options_.mode == GatewayMode::Replay) throw CacheMissError(out.request_hash);

  in_flight_.acquire();
  BackendReply reply;
  try {
    reply = call_with_retries(request, prompt);
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  if (cache_) cache_->put(out.request_hash, request, reply);
  out.text = std::move(reply.text);
  out.finish_reason = std::move(reply.finish_reason);
  out.usage = reply.usage;
  return out;
}

}  // namespace chartforge::llm
