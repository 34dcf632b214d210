#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chartforge/gateway.hpp"
#include "chartforge/metrics.hpp"
#include "chartforge/pipeline.hpp"
#include "chartforge/sandbox.hpp"
#include "json.hpp"

namespace chartforge {

struct GatewaySettings {
  llm::GatewayMode mode = llm::GatewayMode::Live;
  // "mock" serves a fixed placeholder reply; otherwise an http(s) URL.
  std::string endpoint;
  std::string api_key_env = "CHARTFORGE_API_KEY";
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  double timeout_seconds = 120.0;
  // Overridden by $CHARTFORGE_CACHE_DIR when set.
  std::filesystem::path cache_dir = ".chartforge-cache";
  llm::GatewayOptions options;  // options.mode is ignored; see mode
};

struct EvalSettings {
  std::string embedding = "hash";  // see make_embedding_backend
  metrics::CodeBleuWeights codebleu_weights;
  std::optional<double> bertscore_baseline;
  std::string codegen_backend;  // empty: no downstream code generation
  std::filesystem::path aliases;  // empty: builtin table
  std::size_t workers = 4;
};

struct RlhfSettings {
  double sample_frac = 1.0;
  std::uint64_t seed = 0;
  std::string embedding = "hash";
  std::string regen_backend;  // empty: rewards need --regenerated
};

struct ToolkitConfig {
  pipeline::PipelineConfig pipeline;
  GatewaySettings gateway;
  // runner empty: $CHARTFORGE_RUNNER.
  sandbox::SandboxOptions sandbox;
  EvalSettings eval;
  RlhfSettings rlhf;
  std::filesystem::path taxonomy;  // empty: builtin
  std::filesystem::path prompts;   // empty: builtin

  nlohmann::ordered_json to_json() const;
  // Strict: unknown keys and mistyped values are ConfigError.
  static ToolkitConfig from_json(const nlohmann::json& j);
  // Short hash of to_json() without execution-width fields.
  std::string fingerprint() const;
};

// Applies "a.b.c=value" to `j`. The value is parsed as JSON when it parses,
// else taken as a string. The path must exist in `j` unless its parent is a
// free-form map (pipeline.counts, pipeline.backends).
void apply_override(nlohmann::json& j, const std::string& assignment);

// Defaults, then the file (if any), then overrides, in order.
ToolkitConfig load_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides);

}  // namespace chartforge
