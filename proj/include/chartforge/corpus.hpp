#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chartforge/datapoint.hpp"
#include "json.hpp"

namespace chartforge {

struct Corpus {
  std::filesystem::path root;
  std::vector<DataPoint> entries;
  Taxonomy taxonomy;

  const DataPoint* find(std::string_view id) const;
  std::vector<double> category_counts() const;  // indexed like kAllCategories
};

nlohmann::ordered_json to_json(const DataPoint& dp);
// Throws SchemaError on missing or mistyped fields.
DataPoint datapoint_from_json(const nlohmann::json& j);

// Reads one DataPoint per line; blank lines are skipped. The corpus root is
// the file's directory. Throws ParseError (with line number) on malformed
// JSON, SchemaError on duplicate ids, unknown plot types or bad fields.
Corpus load_corpus(const std::filesystem::path& jsonl, const Taxonomy& taxonomy);

// Writes entries as JSONL, byte-stable for equal corpora.
void save_corpus(const Corpus& corpus, const std::filesystem::path& jsonl);
std::string corpus_jsonl(const Corpus& corpus);

// validate_datapoint over every entry plus id uniqueness (rule id_unique).
ValidationReport validate_corpus(const Corpus& corpus);

}  // namespace chartforge
