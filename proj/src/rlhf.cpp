#include "chartforge/rlhf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "chartforge/error.hpp"
#include "chartforge/pipeline.hpp"
#include "chartforge/text.hpp"
#include "json.hpp"

namespace chartforge::rlhf {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view skip_reason_name(SkipReason r) {
  return r == SkipReason::MissingOutput ? "missing_output" : "identical_to_reference";
}

std::size_t PreferenceBuild::skipped(SkipReason r) const {
  return static_cast<std::size_t>(
      std::count_if(skips.begin(), skips.end(), [r](const Skip& s) { return s.reason == r; }));
}

PreferenceBuild build_preference_dataset(const Corpus& corpus,
                                         const std::map<std::string, std::string>& outputs,
                                         const std::string& source_tag) {
  PreferenceBuild out;
  for (const auto& e : corpus.entries) {
    auto it = outputs.find(e.id);
    if (it == outputs.end()) continue;
    const auto rejected = trim(it->second);
    if (rejected.empty()) {
      out.skips.push_back({e.id, SkipReason::MissingOutput});
    } else if (rejected == trim(e.code)) {
      out.skips.push_back({e.id, SkipReason::IdenticalToReference});
    } else {
      out.pairs.push_back({e.id, e.description, e.code, it->second, source_tag});
    }
  }
  for (const auto& [id, _] : outputs) {
    if (!corpus.find(id)) out.unknown_ids.push_back(id);
  }
  return out;
}

std::map<std::string, std::string> load_model_outputs(const fs::path& jsonl, bool extract_code) {
  std::ifstream in(jsonl);
  if (!in) throw IoError("cannot read model outputs: " + jsonl.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(jsonl.string() + ": " + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        (j.contains("text") && !j["text"].is_string() && !j["text"].is_null())) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) +
                        ": expected {id: string, text: string}");
    }
    std::string text = j.value("text", json()).is_string() ? j["text"].get<std::string>() : "";
    if (extract_code && !text.empty()) text = pipeline::extract_code(text);
    if (!out.emplace(j["id"].get<std::string>(), std::move(text)).second) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": duplicate id");
    }
  }
  return out;
}

std::size_t sample_size(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("sample fraction must be in [0, 1]");
  }
  return std::min(n, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
}

std::vector<PreferencePair> sample_pairs(const std::vector<PreferencePair>& pairs, double fraction,
                                         std::uint64_t seed) {
  const auto k = sample_size(pairs.size(), fraction);
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates with an explicit draw so results do not depend on the
  // standard library's distribution implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<PreferencePair> out;
  out.reserve(k);
  for (auto i : idx) out.push_back(pairs[i]);
  return out;
}

AlignmentScore alignment_reward(const std::string& x, const std::string& x_hat,
                                EmbeddingBackend& backend, const std::string& datapoint_id) {
  AlignmentScore s;
  s.datapoint_id = datapoint_id;
  s.original = x;
  s.regenerated = x_hat;
  s.score = text_bert_f(backend, x_hat, x);
  return s;
}

std::map<std::string, std::string> regenerate_descriptions(
    llm::Gateway& gateway, const std::map<std::string, std::string>& outputs,
    const std::string& backend_tag, const llm::Decoding& decoding) {
  std::map<std::string, std::string> out;
  for (const auto& [id, code] : outputs) {
    if (trim(code).empty()) continue;
    llm::ChatRequest req;
    req.template_id = "task3";
    req.bindings = {{"code", code}};
    req.decoding = decoding;
    req.backend_tag = backend_tag;
    out[id] = trim(gateway.complete(req).text);
  }
  return out;
}

std::vector<AlignmentScore> score_outputs(const Corpus& corpus,
                                          const std::map<std::string, std::string>& outputs,
                                          const std::map<std::string, std::string>& regenerated,
                                          EmbeddingBackend& backend) {
  std::vector<AlignmentScore> out;
  for (const auto& e : corpus.entries) {
    auto o = outputs.find(e.id);
    auto r = regenerated.find(e.id);
    if (o == outputs.end() || r == regenerated.end() || trim(r->second).empty()) continue;
    auto s = alignment_reward(e.description, r->second, backend, e.id);
    s.response = o->second;
    out.push_back(std::move(s));
  }
  return out;
}

ExportSummary export_rl_bundle(const std::vector<PreferencePair>& pairs,
                               const std::vector<AlignmentScore>& rewards, const fs::path& dir,
                               const std::string& format) {
  if (format != "jsonl") throw ConfigError("unsupported export format: " + format);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  ExportSummary summary;
  summary.pairs_path = dir / "pairs.jsonl";
  summary.rewards_path = dir / "rewards.jsonl";

  auto open = [](const fs::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(summary.pairs_path);
    for (const auto& p : pairs) {
      f << ordered_json{{"prompt", p.description},
                        {"chosen", p.preferred_code},
                        {"rejected", p.rejected_code}}
               .dump()
        << '\n';
    }
    if (!f) throw IoError("write failed: " + summary.pairs_path.string());
  }
  {
    auto f = open(summary.rewards_path);
    for (const auto& r : rewards) {
      f << ordered_json{{"prompt", r.original},
                        {"response", r.response.empty() ? r.regenerated : r.response},
                        {"reward", r.score}}
               .dump()
        << '\n';
    }
    if (!f) throw IoError("write failed: " + summary.rewards_path.string());
  }
  summary.pairs_written = pairs.size();
  summary.rewards_written = rewards.size();
  if (pairs.empty()) summary.warnings.push_back("no preference pairs to export");
  if (rewards.empty()) summary.warnings.push_back("no rewards to export");
  return summary;
}

namespace {

template <typename F>
void each_json_line(const fs::path& p, F&& fn) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(p.string() + ": " + e.what(), lineno);
    }
  }
}

}  // namespace

std::vector<ExportedPair> read_pairs(const fs::path& jsonl) {
  std::vector<ExportedPair> out;
  each_json_line(jsonl, [&](const json& j) {
    out.push_back({j.at("prompt").get<std::string>(), j.at("chosen").get<std::string>(),
                   j.at("rejected").get<std::string>()});
  });
  return out;
}

std::vector<ExportedReward> read_rewards(const fs::path& jsonl) {
  std::vector<ExportedReward> out;
  each_json_line(jsonl, [&](const json& j) {
    out.push_back({j.at("prompt").get<std::string>(), j.at("response").get<std::string>(),
                   j.at("reward").get<double>()});
  });
  return out;
}

}  // namespace chartforge::rlhf
