#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lund::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Splits on LF, dropping a trailing CR from each line and a final empty line.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace lund::io
