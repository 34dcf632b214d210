#include "chartforge/text.hpp"

#include <cctype>

namespace chartforge {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }

bool is_ident_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) out.emplace_back(s.substr(start));
      break;
    }
    auto line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

TokenSeq normalize_tokens(std::string_view text) {
  TokenSeq out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TokenSeq code_tokens(std::string_view code) {
  TokenSeq out;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(code[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c == '#') {
      while (i < n && code[i] != '\n') ++i;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < n && is_ident_byte(static_cast<unsigned char>(code[j]))) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
    } else if (std::isdigit(c)) {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(code[j])) || code[j] == '.' ||
                       code[j] == '_')) {
        ++j;
      }
      out.emplace_back(code.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && code[j] != static_cast<char>(c) && code[j] != '\n') {
        if (code[j] == '\\' && j + 1 < n) ++j;
        ++j;
      }
      if (j < n && code[j] == static_cast<char>(c)) ++j;
      out.emplace_back(code.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

}  // namespace chartforge
