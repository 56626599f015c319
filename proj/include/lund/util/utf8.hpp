#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lund::utf8 {

// Decodes UTF-8 into codepoints. Invalid sequences decode to U+FFFD one byte
// at a time so that decoding never fails.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

std::size_t length(std::string_view text);

// Strips a leading byte-order mark, if present.
std::string_view strip_bom(std::string_view text);

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' ||
         c == U'\f' || c == 0x00A0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF;
}

std::string_view trim(std::string_view text);

// ASCII-only lower casing; other codepoints are passed through unchanged.
std::string ascii_lower(std::string_view text);

}  // namespace lund::utf8
