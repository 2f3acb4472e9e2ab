#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal CSV plumbing shared by the exporters and loaders.
namespace vofde::csv {

// 17 significant digits, round-trip exact.
std::string format_real(double value);
double parse_real(std::string_view text);
long long parse_int(std::string_view text);

// Rows of comma-separated fields; blank lines are skipped and surrounding
// whitespace is trimmed from each field.
std::vector<std::vector<std::string>> parse(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace vofde::csv
