#include "chartforge/csv.hpp"

#include <charconv>

#include "chartforge/error.hpp"
#include "chartforge/text.hpp"

namespace chartforge {

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool after_quote = false;
  bool row_has_content = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    after_quote = false;
  };
  auto end_row = [&] {
    end_field();
    if (row_has_content || row.size() > 1 || !row.front().empty()) rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      end_field();
      row_has_content = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_row();
      ++line;
    } else if (c == '"' && field.empty() && !after_quote) {
      in_quotes = true;
      row_has_content = true;
    } else if (after_quote) {
      throw ParseError("unexpected character after closing quote", line);
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  if (!field.empty() || !row.empty() || row_has_content) end_row();
  return rows;
}

namespace {

bool looks_numeric(const std::string& s) {
  const auto t = trim(s);
  if (t.empty()) return false;
  double v = 0;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

}  // namespace

CsvTable parse_table(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw ParseError("empty table", 1);
  CsvTable t;
  t.header = std::move(rows.front());
  if (t.header.size() < 1) throw ParseError("missing header", 1);
  bool all_numeric = true;
  for (const auto& h : t.header) {
    if (trim(h).empty()) throw ParseError("empty column name in header", 1);
    all_numeric = all_numeric && looks_numeric(h);
  }
  if (all_numeric) throw ParseError("header row is numeric (headerless table)", 1);
  if (rows.size() < 2) throw ParseError("table has no data rows", 2);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != t.header.size()) {
      throw ParseError("row has " + std::to_string(rows[i].size()) + " fields, header has " +
                           std::to_string(t.header.size()),
                       i + 1);
    }
    t.rows.push_back(std::move(rows[i]));
  }
  return t;
}

std::string write_csv(const CsvTable& table) {
  auto quote = [](const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
    return out;
  };
  std::string out;
  auto write_row = [&](const CsvRow& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += quote(row[i]);
    }
    out += "\r\n";
  };
  write_row(table.header);
  for (const auto& r : table.rows) write_row(r);
  return out;
}

}  // namespace chartforge
