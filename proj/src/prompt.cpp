#include "chartforge/prompt.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "chartforge/error.hpp"
#include "chartforge/taxonomy.hpp"

namespace chartforge::llm {

namespace {

// Calls on_text for literal runs and on_slot for each {{name}}.
template <typename OnText, typename OnSlot>
void scan(std::string_view body, OnText on_text, OnSlot on_slot) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    on_text(body.substr(pos, open - pos));
    on_slot(body.substr(open + 2, close - open - 2));
    pos = close + 2;
  }
  on_text(body.substr(pos));
}

bool valid_name(std::string_view n) {
  if (n.empty()) return false;
  for (char c : n) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace

PromptTemplate PromptTemplate::from_body(std::string id, std::string body) {
  PromptTemplate t{std::move(id), std::move(body), {}};
  scan(
      t.body, [](std::string_view) {},
      [&](std::string_view name) {
        if (!valid_name(name)) {
          throw TemplateError("template '" + t.id + "' has malformed placeholder '{{" +
                              std::string(name) + "}}'");
        }
        t.required_bindings.emplace(name);
      });
  return t;
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::vector<std::string> missing;
  for (const auto& name : required_bindings) {
    if (!bindings.count(name)) missing.push_back(name);
  }
  if (!missing.empty()) throw TemplateError(id, std::move(missing));
  std::string out;
  scan(
      body, [&](std::string_view text) { out.append(text); },
      [&](std::string_view name) { out.append(bindings.at(std::string(name))); });
  return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw TemplateError("prompt directory not found: " + dir.string());
  }
  PromptLibrary lib;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    lib.add(PromptTemplate::from_body(f.stem().string(), ss.str()));
  }
  return lib;
}

PromptLibrary PromptLibrary::builtin() { return load(asset_dir() + "/prompts"); }

void PromptLibrary::add(PromptTemplate t) {
  auto id = t.id;
  templates_.insert_or_assign(std::move(id), std::move(t));
}

bool PromptLibrary::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

const PromptTemplate& PromptLibrary::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw TemplateError("unknown template '" + std::string(id) + "'");
  return it->second;
}

std::string PromptLibrary::render(std::string_view id, const Bindings& bindings) const {
  return get(id).render(bindings);
}

}  // namespace chartforge::llm
