#include <algorithm>
#include <cmath>
#include <map>

#include "chartforge/error.hpp"
#include "chartforge/metrics.hpp"

namespace chartforge::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenSeq& tokens, std::size_t n) {
  NgramCounts out;
  if (n == 0 || tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return out;
}

std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

std::size_t total(const NgramCounts& counts) {
  std::size_t t = 0;
  for (const auto& kv : counts) t += kv.second;
  return t;
}

}  // namespace

PRF make_prf(double precision, double recall) {
  PRF out{precision, recall, 0.0};
  if (precision + recall > 0.0) out.f = 2.0 * precision * recall / (precision + recall);
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PRF rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  return make_prf(lcs / double(candidate.size()), lcs / double(reference.size()));
}

PRF rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l(normalize_tokens(candidate), normalize_tokens(reference));
}

PRF rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
  if (n == 0) throw ContractError("rouge_n requires n >= 1");
  const auto cand = ngrams(candidate, n);
  const auto ref = ngrams(reference, n);
  const std::size_t tc = total(cand);
  const std::size_t tr = total(ref);
  if (tc == 0 || tr == 0) return {};
  const double overlap = static_cast<double>(clipped_overlap(cand, ref));
  return make_prf(overlap / double(tc), overlap / double(tr));
}

PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
  return rouge_n(normalize_tokens(candidate), normalize_tokens(reference), n);
}

namespace {

double bleu_core(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_n,
                 double unigram_precision) {
  if (candidate.empty() || reference.empty() || max_n == 0) return 0.0;
  if (unigram_precision <= 0.0) return 0.0;
  double log_sum = std::log(unigram_precision);
  for (std::size_t n = 2; n <= max_n; ++n) {
    const auto cand = ngrams(candidate, n);
    const auto ref = ngrams(reference, n);
    const double p = (double(clipped_overlap(cand, ref)) + 1.0) / (double(total(cand)) + 1.0);
    log_sum += std::log(p);
  }
  const double c = double(candidate.size());
  const double r = double(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(bp * std::exp(log_sum / double(max_n)), 0.0, 1.0);
}

}  // namespace

double bleu(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_n) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto cand = ngrams(candidate, 1);
  const auto ref = ngrams(reference, 1);
  const double p1 = double(clipped_overlap(cand, ref)) / double(total(cand));
  return bleu_core(candidate, reference, max_n, p1);
}

double weighted_bleu(const TokenSeq& candidate, const TokenSeq& reference,
                     const std::set<std::string>& keywords, double other_weight,
                     std::size_t max_n) {
  if (candidate.empty() || reference.empty()) return 0.0;
  auto weight = [&](const std::string& tok) {
    return keywords.count(tok) ? 1.0 : other_weight;
  };
  // Clipped unigram matches, each weighted by its token's weight; the
  // denominator is the weighted candidate length.
  std::map<std::string, std::size_t> ref_counts;
  for (const auto& t : reference) ++ref_counts[t];
  std::map<std::string, std::size_t> cand_counts;
  for (const auto& t : candidate) ++cand_counts[t];
  double num = 0.0;
  double den = 0.0;
  for (const auto& [tok, count] : cand_counts) {
    const double w = weight(tok);
    den += w * double(count);
    auto it = ref_counts.find(tok);
    if (it != ref_counts.end()) num += w * double(std::min(count, it->second));
  }
  const double p1 = den > 0.0 ? num / den : 0.0;
  return bleu_core(candidate, reference, max_n, p1);
}

double distinct_n(const std::vector<TokenSeq>& texts, std::size_t n) {
  NgramCounts pooled;
  for (const auto& t : texts) {
    for (auto& [gram, count] : ngrams(t, n)) pooled[gram] += count;
  }
  const std::size_t t = total(pooled);
  return t == 0 ? 0.0 : double(pooled.size()) / double(t);
}

double distinct_n_avg(const std::vector<std::string>& texts, std::size_t n_max) {
  if (texts.empty()) throw ContractError("distinct_n_avg requires a non-empty corpus");
  std::vector<TokenSeq> tokenized;
  tokenized.reserve(texts.size());
  for (const auto& t : texts) tokenized.push_back(normalize_tokens(t));
  double sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    NgramCounts pooled;
    for (const auto& t : tokenized) {
      for (auto& [gram, count] : ngrams(t, n)) pooled[gram] += count;
    }
    const std::size_t t = total(pooled);
    if (t == 0) continue;
    sum += double(pooled.size()) / double(t);
    ++orders;
  }
  return orders == 0 ? 0.0 : sum / double(orders);
}

}  // namespace chartforge::metrics
