#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace interlock::io {

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temp file and renames into place, so a failed run
// never leaves a truncated artifact behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Minimal CSV: comma separators, no quoting (none of our fields need it).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace interlock::io
