#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "empatheval/stats.hpp"

namespace empatheval {

/// Fixed-point decimal with round-half-to-even on the decimal value.
///
/// A binary double that sits within 1e-9 (relative to the scaled value) of a
/// decimal tie is treated as that tie, so 0.0125 renders as "0.012" at three
/// places even though its binary value is slightly above the tie.
std::string format_fixed(double value, int decimals);

/// "mean (sd)" at three decimals, or "-" when absent.
std::string format_mean_sd(const std::optional<AggregateStat>& stat);

/// Exact rational percentage `numerator/denominator*100` at two decimals,
/// half-even, e.g. 9408/10000 -> "94.08". Denominator must be > 0.
std::string format_percent(std::size_t numerator, std::size_t denominator);

/// Shortest decimal string that round-trips to the same double.
std::string format_roundtrip(double value);

/// Parse a double written by format_roundtrip (or any plain decimal).
std::optional<double> parse_double(std::string_view text);

/// RFC 4180 quoting, applied only when the field needs it.
std::string csv_field(std::string_view field);

/// Splits one CSV line (no embedded newlines) honouring double quotes.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace empatheval
