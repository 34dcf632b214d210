#include "chartforge/datapoint.hpp"

#include <fstream>
#include <sstream>

#include "chartforge/csv.hpp"
#include "chartforge/error.hpp"
#include "chartforge/hashing.hpp"
#include "chartforge/text.hpp"

namespace chartforge {

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw SchemaError("unknown split '" + std::string(s) + "'");
}

Split assign_split(std::string_view id, std::uint64_t seed, double test_fraction) {
  const auto h = sha256_u64(std::to_string(seed) + ":" + std::string(id));
  const double u = double(h >> 11) * 0x1.0p-53;
  return u < test_fraction ? Split::Test : Split::Train;
}

bool table_is_inline(const std::string& data_table) {
  return data_table.find('\n') != std::string::npos;
}

bool ValidationReport::has(std::string_view rule) const {
  for (const auto& v : violations) {
    if (v.rule == rule) return true;
  }
  return false;
}

void ValidationReport::merge(const ValidationReport& other) {
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

namespace {

bool inside_root(const std::filesystem::path& root, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute()) return false;
  for (const auto& part : p.lexically_normal()) {
    if (part == "..") return false;
  }
  std::error_code ec;
  return std::filesystem::is_regular_file(root / p, ec);
}

}  // namespace

ValidationReport validate_datapoint(const DataPoint& dp, const std::filesystem::path& root,
                                    const Taxonomy* taxonomy) {
  ValidationReport r;
  auto flag = [&](std::string rule, std::string message) {
    r.violations.push_back({dp.id, std::move(rule), std::move(message)});
  };
  if (trim(dp.id).empty()) flag("id_nonempty", "id is empty");
  if (trim(dp.description).empty()) flag("description_nonempty", "description is empty");
  if (trim(dp.code).empty()) flag("code_nonempty", "code is empty");
  if (dp.reasoning && !dp.data_table) {
    flag("reasoning_requires_table", "reasoning present without a data table");
  }
  if (taxonomy != nullptr && !taxonomy->contains(dp.plot_type)) {
    flag("plot_type_known", "plot type '" + dp.plot_type + "' not in taxonomy");
  }
  if (dp.figure_path && !inside_root(root, *dp.figure_path)) {
    flag("figure_exists", "figure '" + *dp.figure_path + "' not found under corpus root");
  }
  if (dp.data_table) {
    std::string text;
    bool readable = true;
    if (table_is_inline(*dp.data_table)) {
      text = *dp.data_table;
    } else if (!inside_root(root, *dp.data_table)) {
      flag("table_exists", "data table '" + *dp.data_table + "' not found under corpus root");
      readable = false;
    } else {
      std::ifstream in(root / *dp.data_table, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    if (readable) {
      try {
        parse_table(text);
      } catch (const ParseError& e) {
        flag("table_csv", e.what());
      }
    }
  }
  return r;
}

}  // namespace chartforge
