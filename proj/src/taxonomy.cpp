#include "chartforge/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include "chartforge/error.hpp"
#include "chartforge/text.hpp"

namespace chartforge {

std::string asset_dir() {
  if (const char* env = std::getenv("CHARTFORGE_ASSETS"); env && *env) return env;
  return CHARTFORGE_ASSET_DIR;
}

std::string_view category_name(PlotCategory c) {
  switch (c) {
    case PlotCategory::Pairwise: return "Pairwise";
    case PlotCategory::StatisticalDistribution: return "StatisticalDistribution";
    case PlotCategory::Gridded: return "Gridded";
    case PlotCategory::IrregularlyGridded: return "IrregularlyGridded";
    case PlotCategory::ThreeDVolumetric: return "ThreeDVolumetric";
  }
  return "?";
}

std::string_view category_key(PlotCategory c) {
  switch (c) {
    case PlotCategory::Pairwise: return "pairwise";
    case PlotCategory::StatisticalDistribution: return "statistical_distribution";
    case PlotCategory::Gridded: return "gridded";
    case PlotCategory::IrregularlyGridded: return "irregularly_gridded";
    case PlotCategory::ThreeDVolumetric: return "three_d_volumetric";
  }
  return "?";
}

PlotCategory parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (name == category_name(c) || name == category_key(c)) return c;
  }
  throw TaxonomyError("unknown plot category '" + std::string(name) + "'");
}

bool table_from_code(PlotCategory c) {
  return c == PlotCategory::Gridded || c == PlotCategory::IrregularlyGridded ||
         c == PlotCategory::ThreeDVolumetric;
}

Taxonomy::Taxonomy(std::vector<PlotType> types) : types_(std::move(types)) {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (types_[i].id.empty()) throw TaxonomyError("plot type with empty id");
    if (!index_.emplace(types_[i].id, i).second) {
      throw TaxonomyError("duplicate plot type id '" + types_[i].id + "'");
    }
  }
}

Taxonomy Taxonomy::parse(std::string_view text) {
  std::vector<PlotType> types;
  std::size_t lineno = 0;
  for (const auto& raw : split_lines(text)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(trim(f));
    if (fields.size() != 3) {
      throw TaxonomyError("taxonomy line " + std::to_string(lineno) +
                          ": expected id<TAB>display_name<TAB>category");
    }
    types.push_back({fields[0], fields[1], parse_category(fields[2])});
  }
  return Taxonomy(std::move(types));
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TaxonomyError("cannot open taxonomy file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Taxonomy Taxonomy::builtin() { return load(asset_dir() + "/taxonomy.tsv"); }

const PlotType* Taxonomy::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &types_[it->second];
}

const PlotType& Taxonomy::at(std::string_view id) const {
  const auto* t = find(id);
  if (t == nullptr) throw TaxonomyError("unknown plot type '" + std::string(id) + "'");
  return *t;
}

PlotCategory Taxonomy::categorize(std::string_view id) const { return at(id).category; }

std::vector<const PlotType*> Taxonomy::in_category(PlotCategory c) const {
  std::vector<const PlotType*> out;
  for (const auto& t : types_) {
    if (t.category == c) out.push_back(&t);
  }
  return out;
}

}  // namespace chartforge
