#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chartforge/ast_facts.hpp"
#include "chartforge/corpus.hpp"
#include "chartforge/embedding.hpp"
#include "chartforge/gateway.hpp"
#include "chartforge/metrics.hpp"
#include "chartforge/sandbox.hpp"
#include "json.hpp"

namespace chartforge::eval {

enum class Task { DescToChart = 1, RawDataToChart = 2, CodeToDesc = 3 };
std::string_view task_name(Task t);
Task task_from_number(int n);

struct Prediction {
  std::string text;  // code (task 1) or description (task 3)
  // Task 2 only.
  std::string reasoning;
  std::string description;
};

struct PredictionSet {
  Task task = Task::DescToChart;
  std::map<std::string, Prediction> items;
  std::string generator_tag;
};

// JSONL {id, text}; task 2 also accepts {id, reasoning, description}, and a
// bare text is split at its last "Description:" line.
PredictionSet load_predictions(const std::filesystem::path& jsonl, Task task,
                               std::string generator_tag = "");
// Task-2 split of one combined reply into reasoning and description.
Prediction split_task2_text(const std::string& text);
// Throws SchemaError naming the first id absent from the corpus.
void check_prediction_ids(const PredictionSet& predictions, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Plot-type extraction

class AliasTable {
 public:
  // TSV alias<TAB>plot_type_id; '#' comments. Every id must be in taxonomy.
  static AliasTable load(const std::filesystem::path& tsv, const Taxonomy& taxonomy);
  static AliasTable builtin(const Taxonomy& taxonomy);

  void add(const std::string& alias, const std::string& plot_type);
  // Longest-first, case-insensitive, whole-word matches over `text`.
  std::set<std::string> match(std::string_view text) const;
  std::size_t size() const { return aliases_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> aliases_;  // sorted longest first
};

struct Recommendations {
  std::set<std::string> types;
  bool section_found = false;
};

// Scans the "possible plot types" section; no section -> empty, flagged.
Recommendations extract_plot_recommendations(std::string_view reasoning, const AliasTable& aliases);

// ---------------------------------------------------------------------------
// Reports

struct Bucket {
  std::size_t executions = 0;
  std::size_t failures = 0;
  double ratio() const { return executions == 0 ? 0.0 : 100.0 * failures / executions; }
};

struct ItemRecord {
  std::string id;
  std::string plot_type;
  PlotCategory category = PlotCategory::Pairwise;
  std::vector<std::string> flags;
  bool executed = false;
  bool failed = false;
  std::string error_class;
  std::map<std::string, double> metrics;
};

struct EvalReport {
  Task task = Task::DescToChart;
  std::string generator_tag;
  nlohmann::ordered_json fingerprint;
  std::map<PlotCategory, Bucket> buckets;
  Bucket total;
  std::map<std::string, double> aggregates;  // mean of the per-item values
  std::vector<ItemRecord> items;

  nlohmann::ordered_json to_json() const;
  std::string summary_table() const;
};

struct EvalContext {
  sandbox::CodeExecutor* executor = nullptr;
  AstFactsSource* ast_facts = nullptr;
  EmbeddingBackend* embedding = nullptr;
  // Generates code from predicted descriptions (tasks 2 and 3); optional.
  llm::Gateway* codegen = nullptr;
  std::string codegen_tag = "default";
  const AliasTable* aliases = nullptr;
  metrics::CodeBleuWeights codebleu_weights;
  // BERTScore rescaling baseline; raw scores when unset.
  std::optional<double> bertscore_baseline;
  std::size_t workers = 4;
};

EvalReport eval_description_to_chart(const Corpus& corpus, const PredictionSet& predictions,
                                     const EvalContext& ctx);
EvalReport eval_rawdata_to_chart(const Corpus& corpus, const PredictionSet& predictions,
                                 const EvalContext& ctx);
EvalReport eval_code_to_description(const Corpus& corpus, const PredictionSet& predictions,
                                    const EvalContext& ctx);
EvalReport evaluate(const Corpus& corpus, const PredictionSet& predictions, const EvalContext& ctx);

}  // namespace chartforge::eval
