#include <algorithm>
#include <cmath>

#include "chartforge/error.hpp"
#include "chartforge/metrics.hpp"

namespace chartforge::metrics {

const std::set<std::string>& python_keywords() {
  static const std::set<std::string> kKeywords = {
      "False", "None",   "True",    "and",      "as",       "assert", "async",
      "await", "break",  "class",   "continue", "def",      "del",    "elif",
      "else",  "except", "finally", "for",      "from",     "global", "if",
      "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
      "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};
  return kKeywords;
}

CodeBleuResult codebleu(std::string_view candidate_code, std::string_view reference_code,
                        const std::optional<AstFacts>& candidate_facts,
                        const std::optional<AstFacts>& reference_facts,
                        const CodeBleuWeights& w) {
  for (double x : {w.ngram, w.weighted_ngram, w.syntax, w.dataflow}) {
    if (!(x >= 0.0)) throw ContractError("codebleu weights must be non-negative");
  }
  if (std::abs(w.ngram + w.weighted_ngram + w.syntax + w.dataflow - 1.0) > 1e-9) {
    throw ContractError("codebleu weights must sum to 1");
  }

  CodeBleuResult r;
  const auto cand = code_tokens(candidate_code);
  const auto ref = code_tokens(reference_code);
  r.ngram = bleu(cand, ref);
  r.weighted_ngram = weighted_bleu(cand, ref, python_keywords());
  if (candidate_facts && reference_facts) {
    r.syntax = multiset_f(candidate_facts->subtree_hashes, reference_facts->subtree_hashes);
    r.dataflow = multiset_f(candidate_facts->dataflow_edges, reference_facts->dataflow_edges);
  } else {
    r.parse_failed = true;
  }
  r.score = w.ngram * r.ngram + w.weighted_ngram * r.weighted_ngram + w.syntax * r.syntax +
            w.dataflow * r.dataflow;
  return r;
}

namespace {

void check_matrix(const EmbeddingMatrix& m, const char* which) {
  if (m.vectors.empty()) throw ContractError(std::string(which) + " embedding has no tokens");
  const std::size_t d = m.dim();
  if (d == 0) throw ContractError(std::string(which) + " embedding has zero dimension");
  for (const auto& row : m.vectors) {
    if (row.size() != d) throw ContractError(std::string(which) + " embedding rows are ragged");
    for (double v : row) {
      if (!std::isfinite(v)) throw ContractError(std::string(which) + " embedding not finite");
    }
  }
  if (!m.idf.empty() && m.idf.size() != m.vectors.size()) {
    throw ContractError(std::string(which) + " idf length does not match token count");
  }
}

// Cosine similarity clamped below at 0. Identical rows score exactly 1.
double similarity(const std::vector<double>& a, double norm_a, const std::vector<double>& b,
                  double norm_b) {
  if (a == b) return norm_a > 0.0 ? 1.0 : 0.0;
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return std::clamp(dot / (norm_a * norm_b), 0.0, 1.0);
}

double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  if (weights.empty()) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / double(values.size());
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

PRF bert_score(const EmbeddingMatrix& candidate, const EmbeddingMatrix& reference) {
  check_matrix(candidate, "candidate");
  check_matrix(reference, "reference");
  if (candidate.dim() != reference.dim()) {
    throw ContractError("embedding dimension mismatch: " + std::to_string(candidate.dim()) +
                        " vs " + std::to_string(reference.dim()));
  }
  auto norms = [](const EmbeddingMatrix& m) {
    std::vector<double> out;
    for (const auto& row : m.vectors) {
      double s = 0.0;
      for (double v : row) s += v * v;
      out.push_back(std::sqrt(s));
    }
    return out;
  };
  const auto nc = norms(candidate);
  const auto nr = norms(reference);

  std::vector<double> best_c(candidate.rows(), 0.0);
  std::vector<double> best_r(reference.rows(), 0.0);
  for (std::size_t i = 0; i < candidate.rows(); ++i) {
    for (std::size_t j = 0; j < reference.rows(); ++j) {
      const double s = similarity(candidate.vectors[i], nc[i], reference.vectors[j], nr[j]);
      best_c[i] = std::max(best_c[i], s);
      best_r[j] = std::max(best_r[j], s);
    }
  }
  return make_prf(weighted_mean(best_c, candidate.idf), weighted_mean(best_r, reference.idf));
}

PRF rescale_with_baseline(const PRF& raw, double baseline) {
  if (!(baseline < 1.0)) throw ContractError("baseline must be < 1");
  auto f = [&](double x) { return (x - baseline) / (1.0 - baseline); };
  return {f(raw.precision), f(raw.recall), f(raw.f)};
}

double shannon_entropy(std::span<const double> counts) {
  double sum = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw ContractError("class counts must be finite and non-negative");
    }
    sum += c;
  }
  if (sum <= 0.0) throw ContractError("class counts are all zero");
  double h = 0.0;
  for (double c : counts) {
    if (c == 0.0) continue;
    const double p = c / sum;
    h -= p * std::log(p);
  }
  return h;
}

double shannon_evenness(std::span<const double> counts) {
  const double h = shannon_entropy(counts);
  if (counts.size() < 2) return 0.0;
  return std::clamp(h / std::log(double(counts.size())), 0.0, 1.0);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return double(inter) / double(uni);
}

double hit_rate(const std::vector<std::set<std::string>>& recommendations,
                const std::vector<std::string>& gt_types) {
  if (recommendations.size() != gt_types.size()) {
    throw ContractError("hit_rate: " + std::to_string(recommendations.size()) +
                        " recommendation sets vs " + std::to_string(gt_types.size()) +
                        " ground-truth types");
  }
  if (gt_types.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt_types.size(); ++i) hits += recommendations[i].count(gt_types[i]);
  return 100.0 * double(hits) / double(gt_types.size());
}

}  // namespace chartforge::metrics
