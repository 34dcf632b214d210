#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace chartforge::llm {

using Bindings = std::map<std::string, std::string>;

// Template ids shipped under assets/prompts/.
inline constexpr const char* kTemplateIds[] = {
    "topic_gen", "description_gen", "self_eval",     "code_gen", "cycle_check", "table_gen",
    "table_code_gen", "reasoning_gen", "task1", "task2", "task3"};

// Body text with {{name}} placeholders.
struct PromptTemplate {
  std::string id;
  std::string body;
  std::set<std::string> required_bindings;

  static PromptTemplate from_body(std::string id, std::string body);

  // Single pass: substituted values are never re-scanned. Throws
  // TemplateError listing every missing binding.
  std::string render(const Bindings& bindings) const;
};

class PromptLibrary {
 public:
  PromptLibrary() = default;
  // Loads every <id>.txt in the directory.
  static PromptLibrary load(const std::filesystem::path& dir);
  static PromptLibrary builtin();

  void add(PromptTemplate t);
  bool contains(std::string_view id) const;
  const PromptTemplate& get(std::string_view id) const;
  std::string render(std::string_view id, const Bindings& bindings) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

}  // namespace chartforge::llm
