#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clir {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
/// Shortest decimal string that parses back to exactly `value` as a float.
std::string format_float(float value);

/// Parses the whole string as a double (no surrounding whitespace); accepts
/// "inf"/"-inf"/"nan".
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Splits on a single-character separator, keeping empty fields.
std::vector<std::string_view> split_fields(std::string_view line, char sep);
/// Splits on runs of spaces and tabs, dropping empty fields.
std::vector<std::string_view> split_whitespace(std::string_view line);

}  // namespace clir
