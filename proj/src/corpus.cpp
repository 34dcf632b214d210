#include "chartforge/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "chartforge/error.hpp"

namespace chartforge {

using nlohmann::json;
using nlohmann::ordered_json;

const DataPoint* Corpus::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::vector<double> Corpus::category_counts() const {
  std::vector<double> counts(kAllCategories.size(), 0.0);
  for (const auto& e : entries) counts[static_cast<std::size_t>(taxonomy.categorize(e.plot_type))] += 1;
  return counts;
}

ordered_json to_json(const DataPoint& dp) {
  auto opt = [](const std::optional<std::string>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json stages = ordered_json::object();
  for (const auto& [k, v] : dp.provenance.stage_hashes) stages[k] = v;
  return ordered_json{
      {"id", dp.id},
      {"plot_type", dp.plot_type},
      {"description", dp.description},
      {"code", dp.code},
      {"data_table", opt(dp.data_table)},
      {"reasoning", opt(dp.reasoning)},
      {"figure_path", opt(dp.figure_path)},
      {"split", split_name(dp.split)},
      {"provenance", ordered_json{{"topic", dp.provenance.topic}, {"stage_hashes", stages}}},
  };
}

namespace {

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw SchemaError(std::string("field '") + key + "' missing or not a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

DataPoint datapoint_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("datapoint is not a JSON object");
  DataPoint dp;
  dp.id = required_string(j, "id");
  dp.plot_type = required_string(j, "plot_type");
  dp.description = required_string(j, "description");
  dp.code = required_string(j, "code");
  dp.data_table = optional_string(j, "data_table");
  dp.reasoning = optional_string(j, "reasoning");
  dp.figure_path = optional_string(j, "figure_path");
  dp.split = parse_split(required_string(j, "split"));
  if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw SchemaError("field 'provenance' is not an object");
    dp.provenance.topic = optional_string(*it, "topic").value_or("");
    if (auto st = it->find("stage_hashes"); st != it->end() && !st->is_null()) {
      if (!st->is_object()) throw SchemaError("provenance.stage_hashes is not an object");
      for (const auto& [k, v] : st->items()) {
        if (!v.is_string()) throw SchemaError("provenance.stage_hashes values must be strings");
        dp.provenance.stage_hashes[k] = v.get<std::string>();
      }
    }
  }
  return dp;
}

Corpus load_corpus(const std::filesystem::path& jsonl, const Taxonomy& taxonomy) {
  std::ifstream in(jsonl, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + jsonl.string());
  Corpus c;
  c.root = jsonl.has_parent_path() ? jsonl.parent_path() : std::filesystem::path(".");
  c.taxonomy = taxonomy;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    DataPoint dp;
    try {
      dp = datapoint_from_json(j);
    } catch (const SchemaError& e) {
      throw SchemaError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
    if (!seen.insert(dp.id).second) {
      throw SchemaError("duplicate id '" + dp.id + "' (line " + std::to_string(lineno) + ")");
    }
    if (!taxonomy.contains(dp.plot_type)) {
      throw SchemaError("unknown plot type '" + dp.plot_type + "' (line " +
                        std::to_string(lineno) + ")");
    }
    c.entries.push_back(std::move(dp));
  }
  return c;
}

std::string corpus_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& e : corpus.entries) {
    out += to_json(e).dump();
    out.push_back('\n');
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& jsonl) {
  if (jsonl.has_parent_path()) std::filesystem::create_directories(jsonl.parent_path());
  const auto tmp = jsonl.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << corpus_jsonl(corpus);
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, jsonl);
}

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport r;
  std::set<std::string> seen;
  for (const auto& e : corpus.entries) {
    if (!seen.insert(e.id).second) r.violations.push_back({e.id, "id_unique", "duplicate id"});
    r.merge(validate_datapoint(e, corpus.root, &corpus.taxonomy));
  }
  return r;
}

}  // namespace chartforge
