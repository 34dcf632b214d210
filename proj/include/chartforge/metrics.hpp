#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chartforge/text.hpp"

namespace chartforge::metrics {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// Harmonic mean, 0 when both inputs are 0.
PRF make_prf(double precision, double recall);

// ---------------------------------------------------------------------------
// n-gram family

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

PRF rouge_l(const TokenSeq& candidate, const TokenSeq& reference);
PRF rouge_l(std::string_view candidate, std::string_view reference);

// Clipped n-gram overlap. Sequences shorter than n contribute zero counts.
PRF rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);
PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n);

// ---------------------------------------------------------------------------
// METEOR

// Synonym classes for the optional third alignment stage. Words in the same
// class align with each other.
class SynonymTable {
 public:
  void add_class(const std::vector<std::string>& words);
  // One class per line, words separated by whitespace or commas.
  static SynonymTable load(const std::string& path);
  bool synonyms(const std::string& a, const std::string& b) const;
  bool empty() const { return class_of_.empty(); }

 private:
  std::unordered_map<std::string, std::vector<std::size_t>> class_of_;
  std::size_t next_class_ = 0;
};

struct MeteorDetail {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_mean = 0.0;
  double penalty = 0.0;
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

MeteorDetail meteor_detail(const TokenSeq& candidate, const TokenSeq& reference,
                           const SynonymTable* synonyms = nullptr);
double meteor(const TokenSeq& candidate, const TokenSeq& reference,
              const SynonymTable* synonyms = nullptr);
double meteor(std::string_view candidate, std::string_view reference,
              const SynonymTable* synonyms = nullptr);

// Porter (1980) suffix-stripping stemmer, lowercase ASCII input.
std::string porter_stem(std::string_view word);

// ---------------------------------------------------------------------------
// BLEU / CodeBLEU

// Sentence BLEU with uniform weights over 1..max_n, brevity penalty, and
// add-one smoothing of numerator and denominator for orders n > 1.
double bleu(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_n = 4);

// BLEU whose unigram precision weights each reference keyword token 1.0 and
// every other token `other_weight`.
double weighted_bleu(const TokenSeq& candidate, const TokenSeq& reference,
                     const std::set<std::string>& keywords, double other_weight = 0.2,
                     std::size_t max_n = 4);

const std::set<std::string>& python_keywords();

// Structural facts about one script, produced by the runner shim's analysis
// mode. Both are multisets; variables in dataflow edges are positional ids.
struct AstFacts {
  std::vector<std::string> subtree_hashes;
  std::vector<std::array<std::string, 3>> dataflow_edges;  // def, use, relation
};

// F-score of multiset overlap; 1.0 when both are empty.
template <typename T>
double multiset_f(const std::vector<T>& candidate, const std::vector<T>& reference) {
  if (candidate.empty() && reference.empty()) return 1.0;
  std::map<T, long> ref_counts;
  for (const auto& r : reference) ++ref_counts[r];
  std::size_t overlap = 0;
  for (const auto& c : candidate) {
    auto it = ref_counts.find(c);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  const double p = candidate.empty() ? 0.0 : double(overlap) / double(candidate.size());
  const double r = reference.empty() ? 0.0 : double(overlap) / double(reference.size());
  return make_prf(p, r).f;
}

struct CodeBleuWeights {
  double ngram = 0.25;
  double weighted_ngram = 0.25;
  double syntax = 0.25;
  double dataflow = 0.25;
};

struct CodeBleuResult {
  double score = 0.0;
  double ngram = 0.0;
  double weighted_ngram = 0.0;
  double syntax = 0.0;
  double dataflow = 0.0;
  // Set when facts were unavailable for either side; syntax and dataflow are
  // then 0.
  bool parse_failed = false;
};

// Throws ContractError when weights are negative or do not sum to 1.
CodeBleuResult codebleu(std::string_view candidate_code, std::string_view reference_code,
                        const std::optional<AstFacts>& candidate_facts,
                        const std::optional<AstFacts>& reference_facts,
                        const CodeBleuWeights& weights = {});

// ---------------------------------------------------------------------------
// BERTScore-style greedy matching

struct EmbeddingMatrix {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;
  std::vector<double> idf;  // empty means uniform weights

  std::size_t rows() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }
};

// Throws ContractError on empty input, ragged rows, non-finite values,
// dimension mismatch, or idf length mismatch.
PRF bert_score(const EmbeddingMatrix& candidate, const EmbeddingMatrix& reference);

// Optional baseline rescaling: (x - b) / (1 - b), applied to P, R and F.
PRF rescale_with_baseline(const PRF& raw, double baseline);

// ---------------------------------------------------------------------------
// Dataset diversity and set metrics

// Mean over n = 1..n_max of unique/total n-grams pooled across texts (n-grams
// never span two texts). Orders with no n-grams are skipped.
double distinct_n_avg(const std::vector<std::string>& texts, std::size_t n_max = 5);
double distinct_n(const std::vector<TokenSeq>& texts, std::size_t n);

// Pielou evenness H / ln S with S = class_counts.size(). Throws ContractError
// on negative counts or all-zero counts. A single class returns 0.
double shannon_entropy(std::span<const double> class_counts);
double shannon_evenness(std::span<const double> class_counts);

// Both empty -> 1.0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Percentage of i with gt[i] in recommendations[i]. Throws ContractError on
// length mismatch; empty input -> 0.
double hit_rate(const std::vector<std::set<std::string>>& recommendations,
                const std::vector<std::string>& gt_types);

}  // namespace chartforge::metrics
