#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qkdlc {

// Decimal text that round-trips a double exactly (%.17g).
std::string format_full(double v);

double parse_double(std::string_view text);

// Writes to <path>.tmp in the same directory, then renames over <path>.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

std::vector<std::string> split(std::string_view line, char sep);

}  // namespace qkdlc
