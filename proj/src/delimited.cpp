#include "lund/util/delimited.hpp"

#include "lund/error.hpp"

namespace lund {

std::vector<DelimitedRow> parse_delimited(std::string_view text, char delimiter) {
  std::vector<DelimitedRow> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();

  while (i < n) {
    DelimitedRow row;
    row.line = line;
    std::string field;
    bool row_done = false;
    bool any_content = false;
    while (!row_done) {
      field.clear();
      if (i < n && text[i] == '"') {
        any_content = true;
        const std::size_t quote_line = line;
        ++i;
        bool closed = false;
        while (i < n) {
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (!closed) {
          throw Error(ErrorKind::ParseError,
                      "unterminated quoted field starting at line " + std::to_string(quote_line));
        }
        if (i < n && text[i] != delimiter && text[i] != '\n' && text[i] != '\r') {
          throw Error(ErrorKind::ParseError,
                      "unexpected character after closing quote at line " + std::to_string(line));
        }
      } else {
        while (i < n && text[i] != delimiter && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"') {
            throw Error(ErrorKind::ParseError,
                        "stray quote in unquoted field at line " + std::to_string(line));
          }
          field.push_back(text[i]);
          ++i;
        }
        if (!field.empty()) any_content = true;
      }
      row.fields.push_back(field);
      if (i < n && text[i] == delimiter) {
        any_content = true;
        ++i;
        continue;
      }
      // end of record
      if (i < n && text[i] == '\r') ++i;
      if (i < n && text[i] == '\n') {
        ++i;
        ++line;
      }
      row_done = true;
    }
    if (any_content) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lund
