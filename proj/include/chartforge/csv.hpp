#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chartforge {

using CsvRow = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line endings.
// Throws ParseError on an unterminated quote or stray characters after a
// closing quote.
std::vector<CsvRow> parse_csv(std::string_view text);

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;
};

// A table must have a non-numeric header with no empty names, at least one
// data row, and a constant column count. Throws ParseError otherwise.
CsvTable parse_table(std::string_view text);

std::string write_csv(const CsvTable& table);

}  // namespace chartforge
