#include <algorithm>
#include <fstream>

#include "chartforge/csv.hpp"
#include "chartforge/error.hpp"
#include "chartforge/hashing.hpp"
#include "chartforge/metrics.hpp"
#include "chartforge/pipeline.hpp"
#include "chartforge/text.hpp"

namespace chartforge::pipeline {

using nlohmann::json;

bool admit_topic(const std::string& candidate, const std::vector<std::string>& pool,
                 double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ContractError("dedup threshold must be in (0, 1]");
  }
  const auto cand = normalize_tokens(candidate);
  for (const auto& existing : pool) {
    if (metrics::rouge_l(cand, normalize_tokens(existing)).f >= threshold) return false;
  }
  return true;
}

std::vector<std::string> parse_topic_lines(std::string_view reply) {
  std::vector<std::string> out;
  for (const auto& raw : split_lines(reply)) {
    std::string line = trim(raw);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == '-' || line[i] == '*' || line[i] == ' ')) ++i;
    std::size_t j = i;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) i = j + 1;
    line = trim(line.substr(i));
    if (!line.empty()) out.push_back(std::move(line));
  }
  return out;
}

std::string_view category_description(PlotCategory c) {
  switch (c) {
    case PlotCategory::Pairwise:
      return "pairs of x and y values such as lines, bars and scatter points";
    case PlotCategory::StatisticalDistribution:
      return "distributions of samples such as histograms, box plots and violins";
    case PlotCategory::Gridded:
      return "values sampled on a regular 2D grid such as heatmaps and vector fields";
    case PlotCategory::IrregularlyGridded:
      return "values at scattered 2D locations drawn as contours or triangulations";
    case PlotCategory::ThreeDVolumetric:
      return "three-dimensional points, surfaces or volumes";
  }
  return "";
}

// ---------------------------------------------------------------------------

SeedBank SeedBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read seed bank: " + path.string());
  SeedBank bank;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      bank.add(j.at("plot_type").get<std::string>(), j.at("description").get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
  }
  return bank;
}

SeedBank SeedBank::builtin() { return load(std::filesystem::path(asset_dir()) / "seeds.jsonl"); }

void SeedBank::add(const std::string& plot_type, std::string description) {
  seeds_[plot_type].push_back(std::move(description));
}

const std::vector<std::string>& SeedBank::seeds(const std::string& plot_type) const {
  static const std::vector<std::string> empty;
  auto it = seeds_.find(plot_type);
  return it == seeds_.end() ? empty : it->second;
}

std::size_t SeedBank::size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : seeds_) n += v.size();
  return n;
}

void SeedBank::check_coverage(const Taxonomy& taxonomy, std::size_t lo, std::size_t hi) const {
  for (const auto& t : taxonomy.types()) {
    const auto n = seeds(t.id).size();
    if (n < lo || n > hi) {
      throw ConfigError("seed bank has " + std::to_string(n) + " seeds for '" + t.id +
                        "', expected " + std::to_string(lo) + ".." + std::to_string(hi));
    }
  }
  for (const auto& [id, _] : seeds_) {
    if (!taxonomy.contains(id)) throw ConfigError("seed bank names unknown plot type: " + id);
  }
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& judge_criteria(JudgeStage stage) {
  static const std::vector<std::string> self_eval{"compatible_with_plot_type", "data_sufficient",
                                                  "well_formed"};
  static const std::vector<std::string> cycle{"plot_type_consistent", "data_source_consistent",
                                              "detail_sufficient"};
  return stage == JudgeStage::SelfEval ? self_eval : cycle;
}

namespace {

std::string strip_markup(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*' && c != '`' && c != '#') out += c;
  }
  return trim(out);
}

std::optional<bool> parse_bool_word(std::string_view word) {
  const auto w = to_lower(trim(word));
  auto starts = [&](std::string_view p) { return w.rfind(p, 0) == 0; };
  if (starts("yes") || starts("true") || starts("pass")) return true;
  if (starts("no") || starts("false") || starts("fail")) return false;
  return std::nullopt;
}

}  // namespace

StageVerdict parse_verdict(JudgeStage stage, const std::string& judge_text) {
  StageVerdict v;
  v.stage = stage;
  v.raw_judge_text = judge_text;
  const auto& wanted = judge_criteria(stage);
  std::map<std::string, bool> found;
  std::optional<bool> verdict;
  for (const auto& raw : split_lines(judge_text)) {
    auto line = strip_markup(raw);
    while (!line.empty() && (line[0] == '-' || line[0] == ' ')) line.erase(0, 1);
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    auto name = to_lower(trim(line.substr(0, colon)));
    std::replace(name.begin(), name.end(), ' ', '_');
    const auto value = parse_bool_word(line.substr(colon + 1));
    if (!value) continue;
    if (name == "verdict") {
      verdict = *value;
    } else if (std::find(wanted.begin(), wanted.end(), name) != wanted.end()) {
      found[name] = *value;
    }
  }
  if (!verdict || found.size() != wanted.size()) {
    v.parse_failed = true;
    v.criteria = std::move(found);
    v.criteria["parseable"] = false;
    v.pass = false;
    return v;
  }
  v.criteria = std::move(found);
  const bool all_yes = std::all_of(v.criteria.begin(), v.criteria.end(),
                                   [](const auto& kv) { return kv.second; });
  if (!*verdict && all_yes) v.criteria["judge_verdict"] = false;
  v.pass = std::all_of(v.criteria.begin(), v.criteria.end(),
                       [](const auto& kv) { return kv.second; });
  return v;
}

bool reasoning_well_formed(std::string_view reasoning) {
  static const std::pair<char, const char*> sections[] = {
      {'1', "characteristics"},
      {'2', "possible plot type"},
      {'3', "most suitable plot type"},
      {'4', "further consideration"},
  };
  bool seen[4] = {false, false, false, false};
  for (const auto& raw : split_lines(reasoning)) {
    auto line = to_lower(strip_markup(raw));
    if (line.size() < 2 || !(line[1] == '.' || line[1] == ')')) continue;
    const auto body = trim(std::string_view(line).substr(2));
    for (int i = 0; i < 4; ++i) {
      if (line[0] == sections[i].first && body.rfind(sections[i].second, 0) == 0) seen[i] = true;
    }
  }
  return std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; });
}

namespace {

std::string extract_fenced(std::string_view reply, std::initializer_list<std::string_view> langs) {
  const std::string lower = to_lower(reply);
  std::size_t start = std::string::npos;
  for (auto lang : langs) {
    const auto p = lower.find("```" + std::string(lang));
    if (p != std::string::npos) {
      const auto after = p + 3 + lang.size();
      // Reject prefixes like ```pythonic.
      if (after >= lower.size() || lower[after] == '\n' || lower[after] == '\r' ||
          lower[after] == ' ') {
        start = p;
        break;
      }
    }
  }
  if (start == std::string::npos) start = lower.find("```");
  if (start == std::string::npos) return trim(reply) + (trim(reply).empty() ? "" : "\n");
  auto body_start = reply.find('\n', start);
  if (body_start == std::string_view::npos) return "";
  ++body_start;
  auto end = reply.find("```", body_start);
  auto body = reply.substr(body_start, end == std::string_view::npos ? std::string_view::npos
                                                                       : end - body_start);
  std::string out(body);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r' || out.back() == ' ')) {
    out.pop_back();
  }
  if (!out.empty()) out += '\n';
  return out;
}

}  // namespace

std::string extract_code(std::string_view reply) { return extract_fenced(reply, {"python", "py"}); }

std::string extract_csv(std::string_view reply) { return extract_fenced(reply, {"csv"}); }

// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config, llm::Gateway& gateway, sandbox::CodeExecutor& executor,
                   SeedBank seeds, Taxonomy taxonomy)
    : config_(std::move(config)),
      gateway_(gateway),
      executor_(executor),
      seeds_(std::move(seeds)),
      taxonomy_(std::move(taxonomy)) {}

llm::ChatResponse Pipeline::call(const std::string& stage, const std::string& template_id,
                                 llm::Bindings bindings, const std::string& key, int attempt) {
  llm::ChatRequest req;
  req.template_id = template_id;
  req.bindings = std::move(bindings);
  req.decoding = config_.decoding;
  if (stage == "self_eval" || stage == "cycle_judge") req.decoding.temperature = config_.judge_temperature;
  req.decoding.seed = sha256_u64(std::to_string(config_.seed) + "/" + stage + "/" + key + "/" +
                                 std::to_string(attempt));
  req.backend_tag = config_.backend_for(stage);
  return gateway_.complete(req);
}

std::vector<TopicEntry> Pipeline::propose_topics(PlotCategory category, std::size_t n,
                                                 std::vector<TopicEntry>& pool,
                                                 std::vector<std::string>* warnings,
                                                 TopicStats* stats) {
  if (n == 0) throw ContractError("propose_topics needs n > 0");
  std::vector<TopicEntry> admitted;
  std::vector<std::string> texts;
  for (const auto& t : pool) texts.push_back(t.text);
  const std::string key = std::string(category_key(category)) + "-topics";
  for (std::size_t round = 0; round < config_.max_topic_rounds && admitted.size() < n; ++round) {
    std::string existing;
    for (const auto& t : texts) existing += "- " + t + "\n";
    if (existing.empty()) existing = "(none)\n";
    const auto want = std::min(config_.topics_per_call, n - admitted.size());
    const auto reply = call("topic", "topic_gen",
                            {{"count", std::to_string(want)},
                             {"category", std::string(category_name(category))},
                             {"category_description", std::string(category_description(category))},
                             {"existing_topics", existing}},
                            key, static_cast<int>(round));
    auto candidates = parse_topic_lines(reply.text);
    if (stats) {
      ++stats->calls;
      stats->proposed += candidates.size();
    }
    for (auto& cand : candidates) {
      if (admitted.size() >= n) break;
      if (!admit_topic(cand, texts, config_.rouge_dedup_threshold)) continue;
      texts.push_back(cand);
      TopicEntry e{cand, category, false};
      pool.push_back(e);
      admitted.push_back(std::move(e));
    }
  }
  if (warnings && admitted.size() < n) {
    warnings->push_back("topic pool for " + std::string(category_key(category)) + " exhausted: " +
                        std::to_string(admitted.size()) + " of " + std::to_string(n) +
                        " topics admitted");
  }
  return admitted;
}

Pipeline::DescriptionOut Pipeline::generate_description(TopicEntry& topic,
                                                        const std::string& plot_type,
                                                        std::mt19937_64& rng,
                                                        const std::string& key) {
  if (topic.consumed) throw ContractError("topic already consumed: " + topic.text);
  const auto& bank = seeds_.seeds(plot_type);
  if (bank.size() < 2) throw ConfigError("fewer than 2 seeds for plot type " + plot_type);
  DescriptionOut out;
  const auto a = static_cast<std::size_t>(rng() % bank.size());
  auto b = static_cast<std::size_t>(rng() % (bank.size() - 1));
  if (b >= a) ++b;
  out.seeds = {bank[a], bank[b]};
  const auto& pt = taxonomy_.at(plot_type);
  for (int attempt = 0; attempt < config_.stage_retries; ++attempt) {
    ++out.outcome.calls;
    const auto reply = call("description", "description_gen",
                            {{"plot_type", pt.display_name},
                             {"seed_1", out.seeds[0]},
                             {"seed_2", out.seeds[1]},
                             {"topic", topic.text}},
                            key, attempt);
    auto text = trim(reply.text);
    if (!text.empty()) {
      out.text = std::move(text);
      out.outcome.ok = true;
      topic.consumed = true;
      return out;
    }
  }
  out.outcome.reason = "description_empty";
  return out;
}

StageVerdict Pipeline::self_evaluate_description(const std::string& description,
                                                 const std::string& plot_type,
                                                 const std::string& key) {
  const auto* pt = taxonomy_.find(plot_type);
  const auto reply =
      call("self_eval", "self_eval",
           {{"plot_type", pt ? pt->display_name : plot_type}, {"description", description}}, key,
           0);
  return parse_verdict(JudgeStage::SelfEval, reply.text);
}

Pipeline::CodeOut Pipeline::generate_code(const std::string& description, const std::string& key) {
  CodeOut out;
  for (int attempt = 0; attempt < config_.stage_retries; ++attempt) {
    ++out.outcome.calls;
    const auto reply = call("code", "code_gen", {{"description", description}}, key, attempt);
    out.code = extract_code(reply.text);
    if (out.code.empty()) {
      out.outcome.detail = "empty_code";
      continue;
    }
    out.result = executor_.execute(out.code, sandbox::Mode::Plot);
    if (out.result.ok() && !out.result.figure_paths.empty()) {
      out.outcome.ok = true;
      out.outcome.detail.clear();
      return out;
    }
    out.outcome.detail = std::string(sandbox::error_class_name(out.result.error_class));
  }
  out.outcome.reason = "sandbox_reject";
  return out;
}

Pipeline::TableOut Pipeline::generate_data_table(const std::string& description,
                                                 PlotCategory category, const std::string& key) {
  TableOut out;
  const bool via_code = table_from_code(category);
  for (int attempt = 0; attempt < config_.stage_retries; ++attempt) {
    ++out.outcome.calls;
    std::string csv;
    if (via_code) {
      const auto reply =
          call("table", "table_code_gen", {{"description", description}}, key, attempt);
      const auto code = extract_code(reply.text);
      const auto result = executor_.execute(code, sandbox::Mode::Table);
      if (!result.ok() || result.csv_outputs.empty()) {
        out.outcome.reason = "table_sandbox";
        out.outcome.detail = result.ok() ? "no_csv"
                                         : std::string(sandbox::error_class_name(result.error_class));
        continue;
      }
      csv = result.read_csv(0);
      out.generating_code = code;
    } else {
      const auto reply = call("table", "table_gen", {{"description", description}}, key, attempt);
      csv = extract_csv(reply.text);
    }
    try {
      parse_table(csv);
    } catch (const ParseError& e) {
      out.outcome.reason = "csv_parse";
      out.outcome.detail = e.what();
      out.generating_code.reset();
      continue;
    }
    out.csv = std::move(csv);
    out.outcome.ok = true;
    out.outcome.reason.clear();
    out.outcome.detail.clear();
    return out;
  }
  return out;
}

Pipeline::ReasoningOut Pipeline::generate_reasoning(const std::string& data_table,
                                                    const std::string& key) {
  ReasoningOut out;
  for (int attempt = 0; attempt < config_.stage_retries; ++attempt) {
    ++out.outcome.calls;
    const auto reply =
        call("reasoning", "reasoning_gen", {{"data_table", data_table}}, key, attempt);
    if (reasoning_well_formed(reply.text)) {
      out.text = trim(reply.text);
      out.outcome.ok = true;
      return out;
    }
  }
  out.outcome.reason = "reasoning_structure";
  return out;
}

StageVerdict Pipeline::verify_cycle_consistency(const std::string& original_description,
                                                const std::string& code, const std::string& key,
                                                std::string* regenerated) {
  const auto regen = call("cycle_regen", "task3", {{"code", code}}, key, 0);
  if (regenerated) *regenerated = trim(regen.text);
  const auto judge = call("cycle_judge", "cycle_check",
                          {{"original_description", original_description},
                           {"regenerated_description", trim(regen.text)}},
                          key, 0);
  return parse_verdict(JudgeStage::CycleCheck, judge.text);
}

}  // namespace chartforge::pipeline
