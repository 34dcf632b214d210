#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "chartforge/metrics.hpp"

namespace chartforge {

// Maps a text to per-token contextual vectors for BERTScore.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual metrics::EmbeddingMatrix embed(const std::string& text) = 0;
  // Recorded in reports next to BERTScore values.
  virtual std::string name() const = 0;
};

// Deterministic mock: each normalized token maps to a vector derived from
// SHA-256(salt, token). Equal texts give equal matrices. Individual tokens can
// be pinned to explicit vectors (TSV: token<TAB>v1 v2 ...).
class HashEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HashEmbeddingBackend(std::size_t dim = 32, std::string salt = "");
  void pin(const std::string& token, std::vector<double> vector);
  void load_pins(const std::filesystem::path& tsv);

  metrics::EmbeddingMatrix embed(const std::string& text) override;
  std::string name() const override;
  std::size_t dim() const { return dim_; }

 private:
  std::vector<double> vector_for(const std::string& token) const;
  std::size_t dim_;
  std::string salt_;
  std::map<std::string, std::vector<double>> pins_;
};

struct HttpEmbeddingOptions {
  std::string endpoint;
  std::string model_tag = "remote";
  double timeout_seconds = 60.0;
};

// POST {"text": ...} -> {"tokens": [...], "vectors": [[...]]}.
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(HttpEmbeddingOptions options);
  metrics::EmbeddingMatrix embed(const std::string& text) override;
  std::string name() const override { return "http:" + options_.model_tag; }

 private:
  HttpEmbeddingOptions options_;
  std::string base_;
  std::string path_;
};

// "hash[:dim]" or an http(s) endpoint URL.
std::unique_ptr<EmbeddingBackend> make_embedding_backend(const std::string& spec);

// BERTScore F between two texts under `backend`. Both texts must be non-empty.
double text_bert_f(EmbeddingBackend& backend, const std::string& candidate,
                   const std::string& reference);

}  // namespace chartforge
