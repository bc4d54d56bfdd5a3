#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace neuclust::textio {

/// "%.9g", the precision of every exported table.
std::string fmt9(double v);
/// "%.17g", enough to round-trip a double.
std::string fmt17(double v);

/// Parses a double or integer, throwing ParseError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

std::string trim(std::string_view s);

std::string read_file(const std::filesystem::path& path);
/// Creates parent directories; throws IoError when the file cannot be written.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace neuclust::textio
