#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge {

enum class PlotCategory {
  Pairwise,
  StatisticalDistribution,
  Gridded,
  IrregularlyGridded,
  ThreeDVolumetric,
};

inline constexpr std::array<PlotCategory, 5> kAllCategories = {
    PlotCategory::Pairwise, PlotCategory::StatisticalDistribution, PlotCategory::Gridded,
    PlotCategory::IrregularlyGridded, PlotCategory::ThreeDVolumetric};

// "Pairwise", "StatisticalDistribution", ... as written in the taxonomy file.
std::string_view category_name(PlotCategory c);
// Lowercase snake form used in config keys and ids: "pairwise", "three_d_volumetric".
std::string_view category_key(PlotCategory c);
// Accepts either spelling. Throws TaxonomyError.
PlotCategory parse_category(std::string_view name);

// Categories whose data tables are produced by executing generated code.
bool table_from_code(PlotCategory c);

struct PlotType {
  std::string id;
  std::string display_name;
  PlotCategory category;

  bool operator==(const PlotType&) const = default;
};

// Immutable after load. Line format: id<TAB>display_name<TAB>category, with
// '#' comments and blank lines ignored.
class Taxonomy {
 public:
  Taxonomy() = default;
  explicit Taxonomy(std::vector<PlotType> types);

  static Taxonomy load(const std::string& path);
  static Taxonomy parse(std::string_view text);
  // The taxonomy shipped in assets/taxonomy.tsv.
  static Taxonomy builtin();

  PlotCategory categorize(std::string_view plot_type_id) const;
  const PlotType& at(std::string_view plot_type_id) const;
  const PlotType* find(std::string_view plot_type_id) const;
  bool contains(std::string_view plot_type_id) const { return find(plot_type_id) != nullptr; }

  const std::vector<PlotType>& types() const { return types_; }
  std::vector<const PlotType*> in_category(PlotCategory c) const;
  std::size_t size() const { return types_.size(); }

 private:
  std::vector<PlotType> types_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

std::string asset_dir();

}  // namespace chartforge
