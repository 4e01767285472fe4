#pragma once

#include <optional>
#include <string>
#include <vector>

namespace m6cast::csv {

/// Split one CSV line on commas. No quoting: every input/output format in
/// this project is plain numeric/date fields. Trailing '\r' is stripped.
std::vector<std::string> split_line(const std::string& line);

/// Strict double parse of a full field; nullopt on any trailing garbage.
std::optional<double> parse_double(const std::string& field);

std::optional<long long> parse_int(const std::string& field);

/// Shortest decimal form that round-trips the exact double value.
std::string format_double(double v);

}  // namespace m6cast::csv
