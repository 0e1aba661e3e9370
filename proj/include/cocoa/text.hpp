#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cocoa::text {

std::vector<std::string_view> split(std::string_view line, char delim = ',');
std::string_view trim(std::string_view s);

// Strict parse of the whole field; nullopt-free: throws Parse with `context`.
double parse_double(std::string_view field, const std::string& context);
long long parse_int(std::string_view field, const std::string& context);

// Shortest decimal representation that round-trips exactly.
std::string format_double(double v);
// Fixed number of digits after the decimal point.
std::string format_fixed(double v, int digits);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace cocoa::text
