#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chartforge/taxonomy.hpp"

namespace chartforge {

enum class Split { Train, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);

// Deterministic split from (seed, id): Test with probability test_fraction.
Split assign_split(std::string_view id, std::uint64_t seed, double test_fraction);

struct Provenance {
  std::string topic;
  // stage name -> content hash of that stage's output
  std::map<std::string, std::string> stage_hashes;

  bool operator==(const Provenance&) const = default;
};

// One (description, code, data table, reasoning, figure) tuple.
//
// data_table holds either inline CSV text (contains a newline) or a path
// relative to the corpus root. figure_path is always relative to the root.
struct DataPoint {
  std::string id;
  std::string plot_type;
  std::string description;
  std::string code;
  std::optional<std::string> data_table;
  std::optional<std::string> reasoning;
  std::optional<std::string> figure_path;
  Split split = Split::Train;
  Provenance provenance;

  bool operator==(const DataPoint&) const = default;
};

bool table_is_inline(const std::string& data_table);

struct Violation {
  std::string datapoint_id;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view rule) const;
  void merge(const ValidationReport& other);
};

// Rules: id_nonempty, description_nonempty, code_nonempty,
// reasoning_requires_table, figure_exists, table_exists, table_csv, and
// plot_type_known when a taxonomy is supplied.
ValidationReport validate_datapoint(const DataPoint& dp, const std::filesystem::path& corpus_root,
                                    const Taxonomy* taxonomy = nullptr);

}  // namespace chartforge
