#include "chartforge/ast_facts.hpp"

#include "chartforge/hashing.hpp"
#include "chartforge/text.hpp"
#include "json.hpp"

namespace chartforge {

using nlohmann::json;

std::optional<metrics::AstFacts> parse_ast_facts(std::string_view stdout_text) {
  const auto lines = split_lines(stdout_text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (trim(*it).empty()) continue;
    try {
      const auto j = json::parse(*it);
      if (!j.is_object() || !j.value("ok", false)) return std::nullopt;
      metrics::AstFacts f;
      f.subtree_hashes = j.at("subtree_hashes").get<std::vector<std::string>>();
      for (const auto& e : j.at("dataflow_edges")) {
        if (!e.is_array() || e.size() != 3) return std::nullopt;
        f.dataflow_edges.push_back(
            {e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()});
      }
      return f;
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<metrics::AstFacts> RunnerAstFacts::facts(const std::string& code) {
  const auto key = sha256_hex(code);
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const auto result = executor_.execute(code, sandbox::Mode::Analyze);
  auto parsed = parse_ast_facts(result.stdout_text);
  std::lock_guard lock(mu_);
  memo_.emplace(key, parsed);
  return parsed;
}

metrics::CodeBleuResult codebleu_with(AstFactsSource* source, const std::string& candidate,
                                      const std::string& reference,
                                      const metrics::CodeBleuWeights& weights) {
  std::optional<metrics::AstFacts> cf, rf;
  if (source) {
    cf = source->facts(candidate);
    rf = source->facts(reference);
  }
  return metrics::codebleu(candidate, reference, cf, rf, weights);
}

}  // namespace chartforge
