#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lund {

struct DelimitedRow {
  std::size_t line = 0;  // 1-based line where the row starts
  std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, LF or
// CRLF line ends. Blank lines are skipped. Throws Error(ParseError) with the
// line number on an unterminated quote or stray quote.
std::vector<DelimitedRow> parse_delimited(std::string_view text, char delimiter = ',');

}  // namespace lund
