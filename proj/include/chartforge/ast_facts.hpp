#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "chartforge/metrics.hpp"
#include "chartforge/sandbox.hpp"

namespace chartforge {

// Source of CodeBLEU syntax/dataflow facts for a script. nullopt means the
// script did not parse.
class AstFactsSource {
 public:
  virtual ~AstFactsSource() = default;
  virtual std::optional<metrics::AstFacts> facts(const std::string& code) = 0;
};

// Parses the analyze-mode report printed by the runner.
std::optional<metrics::AstFacts> parse_ast_facts(std::string_view stdout_text);

// Asks the runner (mode analyze) for facts; results are memoized per script.
class RunnerAstFacts final : public AstFactsSource {
 public:
  explicit RunnerAstFacts(sandbox::CodeExecutor& executor) : executor_(executor) {}
  std::optional<metrics::AstFacts> facts(const std::string& code) override;

 private:
  sandbox::CodeExecutor& executor_;
  std::mutex mu_;
  std::map<std::string, std::optional<metrics::AstFacts>> memo_;
};

// CodeBLEU with facts from `source`; a null source flags parse failure.
metrics::CodeBleuResult codebleu_with(AstFactsSource* source, const std::string& candidate,
                                      const std::string& reference,
                                      const metrics::CodeBleuWeights& weights = {});

}  // namespace chartforge
