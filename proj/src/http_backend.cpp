#include <cstdlib>

#include "chartforge/error.hpp"
#include "chartforge/gateway.hpp"
#include "httplib.h"

namespace chartforge::llm {

using nlohmann::json;

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
  std::tie(base_, path_) = split_endpoint(options_.endpoint);
}

BackendReply HttpChatBackend::generate(const ChatRequest& request, const std::string& prompt) {
  httplib::Client client(base_);
  const auto secs = std::chrono::duration<double>(options_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));

  httplib::Headers headers;
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
      headers.emplace(options_.auth_header, options_.auth_prefix + key);
    }
  }

  json body{{"model", request.backend_tag},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", request.decoding.temperature},
            {"max_tokens", request.decoding.max_tokens},
            {"seed", request.decoding.seed}};

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    throw TransportError("chat request failed: " + httplib::to_string(err),
                         err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error("backend", "chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                               res->body.substr(0, 200));
  }
  try {
    const auto j = json::parse(res->body);
    const auto& choice = j.at("choices").at(0);
    BackendReply reply;
    reply.text = choice.at("message").at("content").get<std::string>();
    if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
      reply.finish_reason = fr->get<std::string>();
    }
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      reply.usage.prompt_tokens = u->value("prompt_tokens", 0ull);
      reply.usage.completion_tokens = u->value("completion_tokens", 0ull);
    }
    return reply;
  } catch (const json::exception& e) {
    throw Error("backend", std::string("malformed chat response: ") + e.what());
  }
}

}  // namespace chartforge::llm
