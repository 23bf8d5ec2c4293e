#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xform::io {

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting; fields never contain commas).
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace xform::io
