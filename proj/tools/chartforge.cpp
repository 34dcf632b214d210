// chartforge command-line entry point.
//
// Exit codes: 0 success, 1 data errors, 2 configuration errors. Failures are
// reported on stderr as one JSON record line followed by a human-readable line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chartforge/config.hpp"
#include "chartforge/corpus.hpp"
#include "chartforge/error.hpp"
#include "chartforge/eval.hpp"
#include "chartforge/metrics.hpp"
#include "chartforge/pipeline.hpp"
#include "chartforge/rlhf.hpp"
#include "chartforge/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace chartforge;
using nlohmann::ordered_json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
};

void log_event(ordered_json j) { std::cerr << j.dump() << "\n"; }

ToolkitConfig resolve(const Common& c, const std::string& subcommand,
                      std::vector<std::string> extra = {}) {
  std::vector<std::string> overrides;
  if (c.seed) {
    overrides.push_back("pipeline.seed=" + std::to_string(*c.seed));
    overrides.push_back("rlhf.seed=" + std::to_string(*c.seed));
  }
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  overrides.insert(overrides.end(), c.overrides.begin(), c.overrides.end());
  std::optional<fs::path> file;
  if (!c.config_path.empty()) file = c.config_path;
  auto cfg = load_config(file, overrides);
  log_event({{"event", "config"}, {"subcommand", subcommand}, {"fingerprint", cfg.fingerprint()}});
  if (c.verbosity > 0) std::cerr << cfg.to_json().dump(2) << "\n";
  return cfg;
}

Taxonomy taxonomy_for(const ToolkitConfig& cfg) {
  return cfg.taxonomy.empty() ? Taxonomy::builtin() : Taxonomy::load(cfg.taxonomy.string());
}

// Backend for replay runs: any call means the cache was bypassed.
class NoBackend final : public llm::Backend {
 public:
  llm::BackendReply generate(const llm::ChatRequest&, const std::string&) override {
    throw ConfigError("no LLM endpoint configured (gateway.endpoint)");
  }
};

std::unique_ptr<llm::Gateway> make_gateway(const ToolkitConfig& cfg) {
  const auto& g = cfg.gateway;
  std::shared_ptr<llm::Backend> backend;
  if (g.endpoint.empty()) {
    if (g.mode == llm::GatewayMode::Live) {
      throw ConfigError("gateway.endpoint is required unless gateway.mode=replay");
    }
    backend = std::make_shared<NoBackend>();
  } else {
    llm::HttpBackendOptions o;
    o.endpoint = g.endpoint;
    o.api_key_env = g.api_key_env;
    o.auth_header = g.auth_header;
    o.auth_prefix = g.auth_prefix;
    o.timeout_seconds = g.timeout_seconds;
    backend = std::make_shared<llm::HttpChatBackend>(o);
  }
  auto prompts = cfg.prompts.empty() ? llm::PromptLibrary::builtin()
                                     : llm::PromptLibrary::load(cfg.prompts);
  auto options = g.options;
  options.mode = g.mode;
  return std::make_unique<llm::Gateway>(std::move(prompts), backend,
                                        std::make_shared<llm::ResponseCache>(g.cache_dir), options);
}

std::unique_ptr<sandbox::Sandbox> make_sandbox(const ToolkitConfig& cfg) {
  auto opts = cfg.sandbox;
  if (opts.runner.empty()) opts.runner = sandbox::runner_from_env();
  if (opts.runner.empty()) {
    throw EnvironmentError("no runner shim configured: set sandbox.runner or CHARTFORGE_RUNNER");
  }
  return std::make_unique<sandbox::Sandbox>(opts);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string out;
  bool restart = false;
  bool replay = false;
};

int cmd_generate(const Common& common, const GenerateArgs& a) {
  std::vector<std::string> extra;
  if (a.replay) extra.push_back("gateway.mode=\"replay\"");
  const auto cfg = resolve(common, "generate", extra);
  const auto tax = taxonomy_for(cfg);
  auto gateway = make_gateway(cfg);
  auto sb = make_sandbox(cfg);
  pipeline::Pipeline p(cfg.pipeline, *gateway, *sb, pipeline::SeedBank::builtin(), tax);
  pipeline::RunOptions ro;
  ro.out_dir = a.out;
  ro.restart = a.restart;
  ro.fingerprint_salt = cfg.fingerprint();
  const auto result = p.run(ro);
  const auto& r = result.report;
  for (const auto& w : r.warnings) log_event({{"event", "warning"}, {"message", w}});
  std::cout << "attempts: " << r.attempts << "  emitted: " << r.emitted
            << "  rejected: " << r.total_rejections() << "\n";
  for (const auto& [reason, n] : r.rejections) std::cout << "  " << reason << ": " << n << "\n";
  std::cout << "corpus: " << (fs::path(a.out) / "corpus.jsonl").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_analyze(const Common& common, const std::string& corpus_path, bool as_json) {
  const auto cfg = resolve(common, "analyze");
  const auto corpus = load_corpus(corpus_path, taxonomy_for(cfg));
  if (corpus.entries.empty()) throw SchemaError("corpus is empty: " + corpus_path);
  const auto counts = corpus.category_counts();
  std::vector<std::string> descriptions;
  for (const auto& e : corpus.entries) descriptions.push_back(e.description);
  const double evenness = metrics::shannon_evenness(counts);
  const double distinct = metrics::distinct_n_avg(descriptions, 5);
  std::map<std::string, std::size_t> per_type;
  for (const auto& e : corpus.entries) ++per_type[e.plot_type];

  if (as_json) {
    ordered_json cats = ordered_json::object();
    for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
      cats[std::string(category_key(kAllCategories[i]))] = static_cast<std::size_t>(counts[i]);
    }
    ordered_json types = ordered_json::object();
    for (const auto& [t, n] : per_type) types[t] = n;
    std::cout << ordered_json{{"entries", corpus.entries.size()},
                              {"shannon_evenness", evenness},
                              {"distinct_n", distinct},
                              {"categories", cats},
                              {"plot_types", types}}
                     .dump(2)
              << "\n";
    return 0;
  }
  char buf[128];
  std::cout << "entries: " << corpus.entries.size() << "\n";
  std::snprintf(buf, sizeof buf, "shannon evenness: %.4f\ndistinct-n (n=1..5): %.4f\n", evenness,
                distinct);
  std::cout << buf;
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    std::snprintf(buf, sizeof buf, "  %-26s %8.0f\n",
                  std::string(category_name(kAllCategories[i])).c_str(), counts[i]);
    std::cout << buf;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  int task = 0;
  std::string corpus;
  std::string predictions;
  std::string report;
  std::string tag;
  bool json = false;
};

int cmd_evaluate(const Common& common, const EvaluateArgs& a) {
  const auto cfg = resolve(common, "evaluate");
  const auto task = eval::task_from_number(a.task);
  const auto tax = taxonomy_for(cfg);
  const auto corpus = load_corpus(a.corpus, tax);
  const auto tag = a.tag.empty() ? fs::path(a.predictions).stem().string() : a.tag;
  const auto preds = eval::load_predictions(a.predictions, task, tag);

  eval::EvalContext ctx;
  ctx.codebleu_weights = cfg.eval.codebleu_weights;
  ctx.bertscore_baseline = cfg.eval.bertscore_baseline;
  ctx.workers = cfg.eval.workers;
  auto embedding = make_embedding_backend(cfg.eval.embedding);
  ctx.embedding = embedding.get();
  const auto aliases = cfg.eval.aliases.empty() ? eval::AliasTable::builtin(tax)
                                                : eval::AliasTable::load(cfg.eval.aliases, tax);
  ctx.aliases = &aliases;

  std::unique_ptr<sandbox::Sandbox> sb;
  std::unique_ptr<RunnerAstFacts> facts;
  std::unique_ptr<llm::Gateway> gateway;
  const bool downstream = task != eval::Task::DescToChart && !cfg.eval.codegen_backend.empty();
  if (task == eval::Task::DescToChart || downstream) {
    sb = make_sandbox(cfg);
    ctx.executor = sb.get();
  }
  if (task == eval::Task::DescToChart) {
    facts = std::make_unique<RunnerAstFacts>(*sb);
    ctx.ast_facts = facts.get();
  }
  if (downstream) {
    gateway = make_gateway(cfg);
    ctx.codegen = gateway.get();
    ctx.codegen_tag = cfg.eval.codegen_backend;
  }
  auto report = eval::evaluate(corpus, preds, ctx);
  report.fingerprint["config"] = cfg.fingerprint();
  const auto json_text = report.to_json().dump(2) + "\n";
  if (!a.report.empty()) write_text(a.report, json_text);
  std::cout << (a.json ? json_text : report.summary_table());
  return 0;
}

// ---------------------------------------------------------------------------

struct PrepArgs {
  std::string corpus;
  std::string outputs;
  std::string out;
  std::string regenerated;
  std::string tag;
  std::optional<double> sample_frac;
};

int cmd_prep_rl(const Common& common, const PrepArgs& a) {
  std::vector<std::string> extra;
  if (a.sample_frac) extra.push_back("rlhf.sample_frac=" + std::to_string(*a.sample_frac));
  const auto cfg = resolve(common, "prep-rl", extra);
  const auto corpus = load_corpus(a.corpus, taxonomy_for(cfg));
  const auto outputs = rlhf::load_model_outputs(a.outputs);
  const auto tag = a.tag.empty() ? fs::path(a.outputs).stem().string() : a.tag;

  const auto built = rlhf::build_preference_dataset(corpus, outputs, tag);
  for (const auto& id : built.unknown_ids) {
    log_event({{"event", "warning"}, {"message", "output id not in corpus: " + id}});
  }
  const auto sampled = rlhf::sample_pairs(built.pairs, cfg.rlhf.sample_frac, cfg.rlhf.seed);

  std::map<std::string, std::string> sampled_outputs;
  for (const auto& p : sampled) sampled_outputs[p.datapoint_id] = p.rejected_code;
  std::map<std::string, std::string> regenerated;
  if (!a.regenerated.empty()) {
    regenerated = rlhf::load_model_outputs(a.regenerated, false);
  } else if (!cfg.rlhf.regen_backend.empty()) {
    auto gateway = make_gateway(cfg);
    regenerated = rlhf::regenerate_descriptions(*gateway, sampled_outputs, cfg.rlhf.regen_backend);
  }
  std::vector<rlhf::AlignmentScore> rewards;
  if (!regenerated.empty()) {
    auto embedding = make_embedding_backend(cfg.rlhf.embedding);
    rewards = rlhf::score_outputs(corpus, sampled_outputs, regenerated, *embedding);
  }
  const auto summary = rlhf::export_rl_bundle(sampled, rewards, a.out);
  for (const auto& w : summary.warnings) log_event({{"event", "warning"}, {"message", w}});

  ordered_json skips = ordered_json::object();
  for (auto r : {rlhf::SkipReason::MissingOutput, rlhf::SkipReason::IdenticalToReference}) {
    skips[std::string(rlhf::skip_reason_name(r))] = built.skipped(r);
  }
  const ordered_json report{{"pairs", built.pairs.size()},
                            {"skips", skips},
                            {"unknown_ids", built.unknown_ids.size()},
                            {"sample_frac", cfg.rlhf.sample_frac},
                            {"sampled", sampled.size()},
                            {"rewards", rewards.size()},
                            {"fingerprint", cfg.fingerprint()}};
  write_text(fs::path(a.out) / "prep_report.json", report.dump(2) + "\n");
  std::cout << "pairs: " << built.pairs.size() << "  skipped: " << built.skips.size()
            << "  sampled: " << sampled.size() << "  rewards: " << rewards.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Common& common, const std::string& corpus_path) {
  const auto cfg = resolve(common, "validate");
  const auto corpus = load_corpus(corpus_path, taxonomy_for(cfg));
  const auto report = validate_corpus(corpus);
  for (const auto& v : report.violations) {
    std::cout << ordered_json{{"id", v.datapoint_id}, {"rule", v.rule}, {"message", v.message}}.dump()
              << "\n";
  }
  std::cout << (report.ok() ? "ok" : "invalid") << ": " << corpus.entries.size() << " entries, "
            << report.violations.size() << " violations\n";
  return report.ok() ? 0 : kExitData;
}

int report_error(const std::string& kind, int code, const std::string& message) {
  std::cerr << ordered_json{{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}}
                   .dump()
            << "\n";
  std::cerr << "chartforge: error: " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chartforge: text-to-chart dataset generation and evaluation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "chartforge 0.1.0");

  Common common;
  app.add_option("-c,--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", common.overrides, "Config override key.path=value (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--seed", common.seed, "Seed for pipeline and sampling");
  app.add_flag("-v,--verbose", common.verbosity, "Print the resolved config to stderr");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Run the generation pipeline to a corpus");
  generate->add_option("-o,--out", gen.out, "Output directory")->required();
  generate->add_flag("--restart", gen.restart, "Discard an existing checkpoint");
  generate->add_flag("--replay", gen.replay, "Serve LLM calls from the cache only");

  std::string analyze_corpus;
  bool analyze_json = false;
  auto* analyze = app.add_subcommand("analyze", "Print corpus quality statistics");
  analyze->add_option("corpus", analyze_corpus, "corpus.jsonl")->required();
  analyze->add_flag("--json", analyze_json, "Machine-readable output");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions on one of the three tasks");
  evaluate->add_option("--task", ev.task, "1 description-to-chart, 2 raw-data-to-chart, "
                                          "3 code-to-description")
      ->required()
      ->check(CLI::Range(1, 3));
  evaluate->add_option("--corpus", ev.corpus, "Ground-truth corpus.jsonl")->required();
  evaluate->add_option("--predictions", ev.predictions, "Predictions JSONL")->required();
  evaluate->add_option("--report", ev.report, "Write the JSON report here");
  evaluate->add_option("--tag", ev.tag, "Generator tag (default: predictions file stem)");
  evaluate->add_flag("--json", ev.json, "Print the JSON report instead of the summary");

  PrepArgs prep;
  auto* prep_rl = app.add_subcommand("prep-rl", "Build preference pairs and alignment rewards");
  prep_rl->add_option("--corpus", prep.corpus, "Ground-truth corpus.jsonl")->required();
  prep_rl->add_option("--outputs", prep.outputs, "Model outputs JSONL {id, text}")->required();
  prep_rl->add_option("-o,--out", prep.out, "Export directory")->required();
  prep_rl->add_option("--regenerated", prep.regenerated,
                      "Descriptions regenerated from the outputs, JSONL {id, text}");
  prep_rl->add_option("--sample-frac", prep.sample_frac, "Fraction of pairs to keep (seeded)")
      ->check(CLI::Range(0.0, 1.0));
  prep_rl->add_option("--tag", prep.tag, "Source tag for rejected outputs");

  std::string validate_corpus_path;
  auto* validate = app.add_subcommand("validate", "Check a corpus against the schema");
  validate->add_option("corpus", validate_corpus_path, "corpus.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", kExitConfig, e.what());
  }

  try {
    if (*generate) return cmd_generate(common, gen);
    if (*analyze) return cmd_analyze(common, analyze_corpus, analyze_json);
    if (*evaluate) return cmd_evaluate(common, ev);
    if (*prep_rl) return cmd_prep_rl(common, prep);
    if (*validate) return cmd_validate(common, validate_corpus_path);
  } catch (const ConfigError& e) {
    return report_error(e.kind(), kExitConfig, e.what());
  } catch (const TemplateError& e) {
    return report_error(e.kind(), kExitConfig, e.what());
  } catch (const TaxonomyError& e) {
    return report_error(e.kind(), kExitConfig, e.what());
  } catch (const EnvironmentError& e) {
    return report_error(e.kind(), kExitConfig, e.what());
  } catch (const Error& e) {
    return report_error(e.kind(), kExitData, e.what());
  } catch (const std::exception& e) {
    return report_error("internal", kExitData, e.what());
  }
  return 0;
}
