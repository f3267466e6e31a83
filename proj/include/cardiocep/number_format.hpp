#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cardiocep {

// Shortest decimal text that parses back to exactly `value`, never in
// scientific notation ("52.5", "0.9", "120").
std::string format_number(double value);

// Fixed notation with `decimals` fractional digits ("30.00").
std::string format_fixed(double value, int decimals);

// Strict decimal parse: optional '-', digits, optional fraction. No exponent,
// no surrounding whitespace, no "nan"/"inf".
std::optional<double> parse_decimal(std::string_view text);

// Like parse_decimal but also accepts exponents; used for data files written by
// other tools. Still rejects non-finite values.
std::optional<double> parse_real(std::string_view text);

std::optional<long long> parse_integer(std::string_view text);

} // namespace cardiocep
