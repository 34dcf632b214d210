#include "chartforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "chartforge/error.hpp"
#include "chartforge/hashing.hpp"

namespace chartforge {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view mode_name(llm::GatewayMode m) {
  return m == llm::GatewayMode::Replay ? "replay" : "live";
}

void only_keys(const json& j, const std::string& where, std::set<std::string> known) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) {
      throw ConfigError("unknown config key: " + (where.empty() ? k : where + "." + k));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

ordered_json ToolkitConfig::to_json() const {
  const auto& g = gateway;
  const auto& w = eval.codebleu_weights;
  return ordered_json{
      {"pipeline", pipeline.to_json()},
      {"gateway",
       {{"mode", std::string(mode_name(g.mode))},
        {"endpoint", g.endpoint},
        {"api_key_env", g.api_key_env},
        {"auth_header", g.auth_header},
        {"auth_prefix", g.auth_prefix},
        {"timeout_seconds", g.timeout_seconds},
        {"cache_dir", g.cache_dir.string()},
        {"max_in_flight", g.options.max_in_flight},
        {"rate_limit_requests", g.options.rate_limit_requests},
        {"rate_limit_window_seconds", g.options.rate_limit_window_seconds},
        {"max_retries", g.options.max_retries},
        {"backoff_base_seconds", g.options.backoff_base_seconds},
        {"backoff_cap_seconds", g.options.backoff_cap_seconds}}},
      {"sandbox",
       {{"runner", sandbox.runner},
        {"wall_timeout_seconds", sandbox.limits.wall_timeout_seconds},
        {"max_output_bytes", sandbox.limits.max_output_bytes},
        {"max_figure_files", sandbox.limits.max_figure_files},
        {"max_concurrent", sandbox.max_concurrent},
        {"base_dir", sandbox.base_dir.string()},
        {"keep_workdirs", sandbox.keep_workdirs}}},
      {"eval",
       {{"embedding", eval.embedding},
        {"codebleu_weights", {w.ngram, w.weighted_ngram, w.syntax, w.dataflow}},
        {"bertscore_baseline",
         eval.bertscore_baseline ? ordered_json(*eval.bertscore_baseline) : ordered_json()},
        {"codegen_backend", eval.codegen_backend},
        {"aliases", eval.aliases.string()},
        {"workers", eval.workers}}},
      {"rlhf",
       {{"sample_frac", rlhf.sample_frac},
        {"seed", rlhf.seed},
        {"embedding", rlhf.embedding},
        {"regen_backend", rlhf.regen_backend}}},
      {"taxonomy", taxonomy.string()},
      {"prompts", prompts.string()}};
}

ToolkitConfig ToolkitConfig::from_json(const json& j) {
  only_keys(j, "", {"pipeline", "gateway", "sandbox", "eval", "rlhf", "taxonomy", "prompts"});
  ToolkitConfig c;
  try {
    if (auto it = j.find("pipeline"); it != j.end()) {
      try {
        c.pipeline = pipeline::PipelineConfig::from_json(*it);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("pipeline: ") + e.what());
      }
    }
    if (auto it = j.find("gateway"); it != j.end()) {
      const auto& g = *it;
      only_keys(g, "gateway",
                {"mode", "endpoint", "api_key_env", "auth_header", "auth_prefix", "timeout_seconds",
                 "cache_dir", "max_in_flight", "rate_limit_requests", "rate_limit_window_seconds",
                 "max_retries", "backoff_base_seconds", "backoff_cap_seconds"});
      auto& s = c.gateway;
      if (g.contains("mode")) s.mode = llm::parse_gateway_mode(g["mode"].get<std::string>());
      read(g, "endpoint", s.endpoint);
      read(g, "api_key_env", s.api_key_env);
      read(g, "auth_header", s.auth_header);
      read(g, "auth_prefix", s.auth_prefix);
      read(g, "timeout_seconds", s.timeout_seconds);
      if (g.contains("cache_dir")) s.cache_dir = g["cache_dir"].get<std::string>();
      read(g, "max_in_flight", s.options.max_in_flight);
      read(g, "rate_limit_requests", s.options.rate_limit_requests);
      read(g, "rate_limit_window_seconds", s.options.rate_limit_window_seconds);
      read(g, "max_retries", s.options.max_retries);
      read(g, "backoff_base_seconds", s.options.backoff_base_seconds);
      read(g, "backoff_cap_seconds", s.options.backoff_cap_seconds);
    }
    if (auto it = j.find("sandbox"); it != j.end()) {
      const auto& s = *it;
      only_keys(s, "sandbox",
                {"runner", "wall_timeout_seconds", "max_output_bytes", "max_figure_files",
                 "max_concurrent", "base_dir", "keep_workdirs"});
      read(s, "runner", c.sandbox.runner);
      read(s, "wall_timeout_seconds", c.sandbox.limits.wall_timeout_seconds);
      read(s, "max_output_bytes", c.sandbox.limits.max_output_bytes);
      read(s, "max_figure_files", c.sandbox.limits.max_figure_files);
      read(s, "max_concurrent", c.sandbox.max_concurrent);
      if (s.contains("base_dir")) c.sandbox.base_dir = s["base_dir"].get<std::string>();
      read(s, "keep_workdirs", c.sandbox.keep_workdirs);
    }
    if (auto it = j.find("eval"); it != j.end()) {
      const auto& e = *it;
      only_keys(e, "eval",
                {"embedding", "codebleu_weights", "bertscore_baseline", "codegen_backend",
                 "aliases", "workers"});
      read(e, "embedding", c.eval.embedding);
      if (e.contains("codebleu_weights")) {
        const auto w = e["codebleu_weights"].get<std::vector<double>>();
        if (w.size() != 4) throw ConfigError("eval.codebleu_weights needs four numbers");
        c.eval.codebleu_weights = {w[0], w[1], w[2], w[3]};
      }
      if (e.contains("bertscore_baseline") && !e["bertscore_baseline"].is_null()) {
        c.eval.bertscore_baseline = e["bertscore_baseline"].get<double>();
      }
      read(e, "codegen_backend", c.eval.codegen_backend);
      if (e.contains("aliases")) c.eval.aliases = e["aliases"].get<std::string>();
      read(e, "workers", c.eval.workers);
    }
    if (auto it = j.find("rlhf"); it != j.end()) {
      const auto& r = *it;
      only_keys(r, "rlhf", {"sample_frac", "seed", "embedding", "regen_backend"});
      read(r, "sample_frac", c.rlhf.sample_frac);
      read(r, "seed", c.rlhf.seed);
      read(r, "embedding", c.rlhf.embedding);
      read(r, "regen_backend", c.rlhf.regen_backend);
    }
    if (j.contains("taxonomy")) c.taxonomy = j["taxonomy"].get<std::string>();
    if (j.contains("prompts")) c.prompts = j["prompts"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  if (!(c.rlhf.sample_frac >= 0.0 && c.rlhf.sample_frac <= 1.0)) {
    throw ConfigError("rlhf.sample_frac must be in [0, 1]");
  }
  if (!(c.sandbox.limits.wall_timeout_seconds > 0)) {
    throw ConfigError("sandbox.wall_timeout_seconds must be positive");
  }
  return c;
}

std::string ToolkitConfig::fingerprint() const {
  auto j = to_json();
  j["pipeline"].erase("workers");
  j["eval"].erase("workers");
  j["gateway"].erase("max_in_flight");
  j["gateway"].erase("cache_dir");
  j["sandbox"].erase("max_concurrent");
  j["sandbox"].erase("base_dir");
  j["sandbox"].erase("keep_workdirs");
  return sha256_hex(j.dump()).substr(0, 16);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + assignment);
  }
  const auto path = assignment.substr(0, eq);
  const auto raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  std::vector<std::string> keys;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    keys.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  static const std::set<std::string> free_maps{"pipeline.counts", "pipeline.backends"};
  json* node = &j;
  std::string prefix;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& k = keys[i];
    if (k.empty()) throw ConfigError("empty key in override: " + path);
    if (!node->is_object()) throw ConfigError("cannot descend into " + prefix + " (not a section)");
    const bool free = free_maps.count(prefix) > 0;
    if (!node->contains(k) && !free) throw ConfigError("unknown config key: " + path);
    prefix += (prefix.empty() ? "" : ".") + k;
    if (i + 1 == keys.size()) {
      (*node)[k] = value;
    } else {
      node = &(*node)[k];
    }
  }
}

ToolkitConfig load_config(const std::optional<fs::path>& file,
                          const std::vector<std::string>& overrides) {
  json j = json::parse(ToolkitConfig{}.to_json().dump());
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file: " + file->string());
    json user;
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + file->string() + " is not valid JSON: " + e.what());
    }
    only_keys(user, "", {"pipeline", "gateway", "sandbox", "eval", "rlhf", "taxonomy", "prompts"});
    for (const auto& [section, body] : user.items()) {
      if (body.is_object() && j[section].is_object()) {
        for (const auto& [k, v] : body.items()) {
          if (!j[section].contains(k)) throw ConfigError("unknown config key: " + section + "." + k);
          j[section][k] = v;
        }
      } else {
        j[section] = body;
      }
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  auto c = ToolkitConfig::from_json(j);
  if (const char* env = std::getenv("CHARTFORGE_CACHE_DIR"); env && *env) c.gateway.cache_dir = env;
  return c;
}

}  // namespace chartforge
