#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include "chartforge/error.hpp"
#include "chartforge/metrics.hpp"

namespace chartforge::metrics {

void SynonymTable::add_class(const std::vector<std::string>& words) {
  const std::size_t id = next_class_++;
  for (const auto& w : words) class_of_[to_lower(w)].push_back(id);
}

SynonymTable SynonymTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synonym file " + path);
  SynonymTable table;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& c : line) {
      if (c == ',') c = ' ';
    }
    auto words = normalize_tokens(line);
    if (words.size() >= 2) table.add_class(words);
  }
  return table;
}

bool SynonymTable::synonyms(const std::string& a, const std::string& b) const {
  auto ia = class_of_.find(a);
  auto ib = class_of_.find(b);
  if (ia == class_of_.end() || ib == class_of_.end()) return false;
  for (auto x : ia->second) {
    if (std::find(ib->second.begin(), ib->second.end(), x) != ib->second.end()) return true;
  }
  return false;
}

namespace {

using Matcher = std::function<bool(std::size_t, std::size_t)>;

// One alignment stage over still-unaligned positions. Candidate tokens are
// visited left to right; each prefers the reference position right after the
// previous alignment so contiguous runs stay in one chunk.
void align_stage(std::vector<long>& cand_to_ref, std::vector<bool>& ref_used,
                 const Matcher& match) {
  long last_ref = -1;
  for (std::size_t i = 0; i < cand_to_ref.size(); ++i) {
    if (cand_to_ref[i] >= 0) {
      last_ref = cand_to_ref[i];
      continue;
    }
    long chosen = -1;
    const std::size_t next = static_cast<std::size_t>(last_ref + 1);
    if (last_ref + 1 >= 0 && next < ref_used.size() && !ref_used[next] && match(i, next)) {
      chosen = static_cast<long>(next);
    }
    if (chosen < 0) {
      long fallback = -1;
      for (std::size_t j = 0; j < ref_used.size(); ++j) {
        if (ref_used[j] || !match(i, j)) continue;
        if (static_cast<long>(j) > last_ref) {
          chosen = static_cast<long>(j);
          break;
        }
        if (fallback < 0) fallback = static_cast<long>(j);
      }
      if (chosen < 0) chosen = fallback;
    }
    if (chosen >= 0) {
      cand_to_ref[i] = chosen;
      ref_used[static_cast<std::size_t>(chosen)] = true;
      last_ref = chosen;
    }
  }
}

}  // namespace

MeteorDetail meteor_detail(const TokenSeq& candidate, const TokenSeq& reference,
                           const SynonymTable* synonyms) {
  MeteorDetail d;
  if (candidate.empty() || reference.empty()) return d;

  std::vector<long> cand_to_ref(candidate.size(), -1);
  std::vector<bool> ref_used(reference.size(), false);

  align_stage(cand_to_ref, ref_used,
              [&](std::size_t i, std::size_t j) { return candidate[i] == reference[j]; });

  std::vector<std::string> cand_stems, ref_stems;
  for (const auto& t : candidate) cand_stems.push_back(porter_stem(t));
  for (const auto& t : reference) ref_stems.push_back(porter_stem(t));
  align_stage(cand_to_ref, ref_used,
              [&](std::size_t i, std::size_t j) { return cand_stems[i] == ref_stems[j]; });

  if (synonyms != nullptr && !synonyms->empty()) {
    align_stage(cand_to_ref, ref_used, [&](std::size_t i, std::size_t j) {
      return synonyms->synonyms(candidate[i], reference[j]);
    });
  }

  long prev_ref = -2;
  bool prev_aligned = false;
  for (long r : cand_to_ref) {
    if (r < 0) {
      prev_aligned = false;
      continue;
    }
    ++d.matches;
    if (!prev_aligned || r != prev_ref + 1) ++d.chunks;
    prev_ref = r;
    prev_aligned = true;
  }
  if (d.matches == 0) return d;

  const double m = static_cast<double>(d.matches);
  d.precision = m / double(candidate.size());
  d.recall = m / double(reference.size());
  d.f_mean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
  d.penalty = 0.5 * std::pow(double(d.chunks) / m, 3.0);
  d.score = d.f_mean * (1.0 - d.penalty);
  return d;
}

double meteor(const TokenSeq& candidate, const TokenSeq& reference, const SynonymTable* synonyms) {
  return meteor_detail(candidate, reference, synonyms).score;
}

double meteor(std::string_view candidate, std::string_view reference,
              const SynonymTable* synonyms) {
  return meteor(normalize_tokens(candidate), normalize_tokens(reference), synonyms);
}

}  // namespace chartforge::metrics
