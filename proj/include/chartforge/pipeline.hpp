#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chartforge/corpus.hpp"
#include "chartforge/gateway.hpp"
#include "chartforge/sandbox.hpp"
#include "chartforge/taxonomy.hpp"
#include "json.hpp"

namespace chartforge::pipeline {

// ---------------------------------------------------------------------------
// Topics

struct TopicEntry {
  std::string text;
  PlotCategory category = PlotCategory::Pairwise;
  bool consumed = false;
};

// True iff max ROUGE-L F of candidate against the pool is below threshold.
bool admit_topic(const std::string& candidate, const std::vector<std::string>& pool,
                 double threshold);

// Splits a topic_gen reply into candidate topics (bullets and numbering removed).
std::vector<std::string> parse_topic_lines(std::string_view reply);

// Plain-language gloss of a category used in the topic prompt.
std::string_view category_description(PlotCategory c);

// ---------------------------------------------------------------------------
// Seeds

class SeedBank {
 public:
  // JSONL lines {"plot_type": id, "description": text}.
  static SeedBank load(const std::filesystem::path& path);
  static SeedBank builtin();

  void add(const std::string& plot_type, std::string description);
  const std::vector<std::string>& seeds(const std::string& plot_type) const;
  std::size_t size() const;
  // Throws ConfigError unless every taxonomy type has between lo and hi seeds.
  void check_coverage(const Taxonomy& taxonomy, std::size_t lo = 5, std::size_t hi = 10) const;

 private:
  std::map<std::string, std::vector<std::string>> seeds_;
};

// ---------------------------------------------------------------------------
// Verdicts and structural checks

enum class JudgeStage { SelfEval, CycleCheck };

struct StageVerdict {
  JudgeStage stage = JudgeStage::SelfEval;
  bool pass = false;
  std::map<std::string, bool> criteria;
  std::string raw_judge_text;
  // Set when the reply lacked a verdict line or a required criterion. The
  // criteria map then carries parseable=false.
  bool parse_failed = false;
};

const std::vector<std::string>& judge_criteria(JudgeStage stage);
StageVerdict parse_verdict(JudgeStage stage, const std::string& judge_text);

// All four numbered sections present, in any order.
bool reasoning_well_formed(std::string_view reasoning);

// Body of the first ```python (or bare ```) fence; the trimmed text otherwise.
std::string extract_code(std::string_view reply);
// Same for CSV replies (```csv fences).
std::string extract_csv(std::string_view reply);

// ---------------------------------------------------------------------------
// Configuration

// Stage names used for backend tags, events and report counters.
inline constexpr const char* kStages[] = {"topic",     "description", "self_eval",
                                          "code",      "table",       "reasoning",
                                          "cycle_regen", "cycle_judge"};

struct PipelineConfig {
  // Number of datapoint attempts per category (one topic each).
  std::map<PlotCategory, std::size_t> counts;
  double rouge_dedup_threshold = 0.7;
  std::size_t topics_per_call = 10;
  // Topic-generation calls per category before giving up with a warning.
  std::size_t max_topic_rounds = 5;
  // Attempts per stage before a rejection record.
  int stage_retries = 3;
  std::map<std::string, std::string> backends;  // stage -> backend tag
  llm::Decoding decoding;
  // Used instead of decoding.temperature by the self_eval and cycle_judge stages.
  double judge_temperature = 0.0;
  std::uint64_t seed = 0;
  double test_fraction = 0.13;
  std::size_t workers = 4;

  std::string backend_for(const std::string& stage) const;
  nlohmann::ordered_json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  // Hash over every field that influences output (workers excluded).
  std::string fingerprint() const;
};

struct RunOptions {
  std::filesystem::path out_dir;
  // Default: <out_dir>/checkpoint.jsonl.
  std::optional<std::filesystem::path> checkpoint;
  // Discard an existing checkpoint instead of resuming from it.
  bool restart = false;
  // Test hook: stop with PipelineHalted after this many checkpoint events.
  std::optional<std::size_t> halt_after_events;
  // Extra text folded into the fingerprint (e.g. sandbox limits).
  std::string fingerprint_salt;
};

struct PipelineHalted : std::runtime_error {
  PipelineHalted() : std::runtime_error("pipeline halted by test hook") {}
};

// ---------------------------------------------------------------------------
// Report

struct StageCounter {
  std::size_t calls = 0;
  std::size_t failures = 0;
};

struct CategoryYield {
  std::size_t attempts = 0;
  std::size_t emitted = 0;
  std::size_t topics_proposed = 0;
  std::size_t topics_admitted = 0;
};

struct RunReport {
  std::string fingerprint;
  std::size_t attempts = 0;
  std::size_t emitted = 0;
  std::map<std::string, std::size_t> rejections;
  std::map<std::string, StageCounter> stages;
  std::map<std::string, CategoryYield> categories;
  std::vector<std::string> warnings;

  std::size_t total_rejections() const;
  nlohmann::ordered_json to_json() const;
};

struct PipelineResult {
  Corpus corpus;
  RunReport report;
};

// ---------------------------------------------------------------------------
// Stage functions

class Pipeline {
 public:
  Pipeline(PipelineConfig config, llm::Gateway& gateway, sandbox::CodeExecutor& executor,
           SeedBank seeds, Taxonomy taxonomy);

  // Topic generation with ROUGE-L admission against `pool`; admitted topics are
  // appended to the pool and returned.
  struct TopicStats {
    std::size_t calls = 0;
    std::size_t proposed = 0;
  };
  std::vector<TopicEntry> propose_topics(PlotCategory category, std::size_t n,
                                         std::vector<TopicEntry>& pool,
                                         std::vector<std::string>* warnings = nullptr,
                                         TopicStats* stats = nullptr);

  struct StageOutcome {
    bool ok = false;
    std::string reason;  // rejection reason when !ok
    std::string detail;  // e.g. the sandbox error class
    std::size_t calls = 0;
  };

  struct DescriptionOut {
    StageOutcome outcome;
    std::string text;
    std::array<std::string, 2> seeds;
  };
  DescriptionOut generate_description(TopicEntry& topic, const std::string& plot_type,
                                      std::mt19937_64& rng, const std::string& key);

  StageVerdict self_evaluate_description(const std::string& description,
                                         const std::string& plot_type, const std::string& key);

  struct CodeOut {
    StageOutcome outcome;
    std::string code;
    sandbox::SandboxResult result;
  };
  CodeOut generate_code(const std::string& description, const std::string& key);

  struct TableOut {
    StageOutcome outcome;
    std::string csv;
    std::optional<std::string> generating_code;
  };
  TableOut generate_data_table(const std::string& description, PlotCategory category,
                               const std::string& key);

  struct ReasoningOut {
    StageOutcome outcome;
    std::string text;
  };
  ReasoningOut generate_reasoning(const std::string& data_table, const std::string& key);

  StageVerdict verify_cycle_consistency(const std::string& original_description,
                                        const std::string& code, const std::string& key,
                                        std::string* regenerated = nullptr);

  // Full run; writes corpus.jsonl, figures/, tables/, reports/ and the
  // checkpoint under options.out_dir.
  PipelineResult run(const RunOptions& options);

  const PipelineConfig& config() const { return config_; }

 private:
  llm::ChatResponse call(const std::string& stage, const std::string& template_id,
                         llm::Bindings bindings, const std::string& key, int attempt);

  PipelineConfig config_;
  llm::Gateway& gateway_;
  sandbox::CodeExecutor& executor_;
  SeedBank seeds_;
  Taxonomy taxonomy_;
};

}  // namespace chartforge::pipeline
