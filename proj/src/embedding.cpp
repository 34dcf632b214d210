#include "chartforge/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chartforge/error.hpp"
#include "chartforge/gateway.hpp"
#include "chartforge/hashing.hpp"
#include "chartforge/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace chartforge {

using nlohmann::json;

HashEmbeddingBackend::HashEmbeddingBackend(std::size_t dim, std::string salt)
    : dim_(dim), salt_(std::move(salt)) {
  if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

void HashEmbeddingBackend::pin(const std::string& token, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw ConfigError("pinned vector for '" + token + "' has dimension " +
                      std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  }
  pins_[token] = std::move(vector);
}

void HashEmbeddingBackend::load_pins(const std::filesystem::path& tsv) {
  std::ifstream in(tsv);
  if (!in) throw IoError("cannot read embedding pins: " + tsv.string());
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("pin line without tab: " + line);
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> v;
    for (double x; vs >> x;) v.push_back(x);
    pin(line.substr(0, tab), std::move(v));
  }
}

std::vector<double> HashEmbeddingBackend::vector_for(const std::string& token) const {
  if (auto it = pins_.find(token); it != pins_.end()) return it->second;
  std::vector<double> v;
  v.reserve(dim_);
  for (std::size_t block = 0; v.size() < dim_; ++block) {
    const auto digest = sha256_hex(salt_ + '\x1f' + token + '\x1f' + std::to_string(block));
    for (std::size_t i = 0; i + 4 <= digest.size() && v.size() < dim_; i += 4) {
      const auto word = std::stoul(digest.substr(i, 4), nullptr, 16);
      v.push_back(static_cast<double>(word) / 32767.5 - 1.0);
    }
  }
  return v;
}

metrics::EmbeddingMatrix HashEmbeddingBackend::embed(const std::string& text) {
  metrics::EmbeddingMatrix m;
  m.tokens = normalize_tokens(text);
  for (const auto& t : m.tokens) m.vectors.push_back(vector_for(t));
  return m;
}

std::string HashEmbeddingBackend::name() const {
  return "hash:" + std::to_string(dim_) + (salt_.empty() ? "" : ":" + salt_);
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEmbeddingOptions options)
    : options_(std::move(options)) {
  std::tie(base_, path_) = llm::split_endpoint(options_.endpoint);
}

metrics::EmbeddingMatrix HttpEmbeddingBackend::embed(const std::string& text) {
  httplib::Client client(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options_.timeout_seconds));
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  auto res = client.Post(path_, json{{"text", text}}.dump(), "application/json");
  if (!res) throw TransportError("embedding request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransportError("embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = json::parse(res->body);
    metrics::EmbeddingMatrix m;
    m.tokens = j.at("tokens").get<std::vector<std::string>>();
    m.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
    if (m.tokens.size() != m.vectors.size()) {
      throw Error("backend", "embedding response has mismatched tokens/vectors");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error("backend", std::string("malformed embedding response: ") + e.what());
  }
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const std::string& spec) {
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    return std::make_unique<HttpEmbeddingBackend>(HttpEmbeddingOptions{spec});
  }
  if (spec == "hash") return std::make_unique<HashEmbeddingBackend>();
  if (spec.rfind("hash:", 0) == 0) {
    try {
      return std::make_unique<HashEmbeddingBackend>(std::stoul(spec.substr(5)));
    } catch (const std::logic_error&) {
    }
  }
  throw ConfigError("unknown embedding backend: " + spec);
}

double text_bert_f(EmbeddingBackend& backend, const std::string& candidate,
                   const std::string& reference) {
  const auto c = backend.embed(candidate);
  const auto r = backend.embed(reference);
  if (c.rows() == 0 || r.rows() == 0) {
    throw ContractError("BERTScore needs non-empty texts on both sides");
  }
  return metrics::bert_score(c, r).f;
}

}  // namespace chartforge
