#pragma once

// Small text helpers shared by the file readers and writers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trifuse::text {

// Splits on every occurrence of `sep`; empty fields are kept.
std::vector<std::string_view> split(std::string_view line, char sep);

// Splits on runs of spaces/tabs; empty fields are dropped.
std::vector<std::string_view> split_ws(std::string_view line);

std::string_view trim_eol(std::string_view line);

bool has_whitespace(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

}  // namespace trifuse::text
