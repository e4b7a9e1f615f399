#include "empatheval/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <system_error>

namespace empatheval {

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  const double scale = std::pow(10.0, decimals);
  const double scaled = std::fabs(value) * scale;
  double whole = std::floor(scaled);
  const double frac = scaled - whole;
  const double tie_tol = 1e-9 * std::max(1.0, scaled);
  if (std::fabs(frac - 0.5) <= tie_tol) {
    if (std::fmod(whole, 2.0) != 0.0) whole += 1.0;
  } else if (frac > 0.5) {
    whole += 1.0;
  }
  auto digits = std::to_string(static_cast<std::uint64_t>(whole));
  if (decimals > 0) {
    if (digits.size() <= static_cast<std::size_t>(decimals))
      digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
    digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
  }
  const bool negative = value < 0 && whole != 0.0;
  return negative ? "-" + digits : digits;
}

std::string format_mean_sd(const std::optional<AggregateStat>& stat) {
  if (!stat) return "-";
  return format_fixed(stat->mean, 3) + " (" + format_fixed(stat->sd, 3) + ")";
}

std::string format_percent(std::size_t numerator, std::size_t denominator) {
  // hundredths of a percent = numerator * 10000 / denominator
  const auto scaled = static_cast<unsigned __int128>(numerator) * 10000U;
  auto q = static_cast<std::uint64_t>(scaled / denominator);
  const auto r = static_cast<std::uint64_t>(scaled % denominator);
  const auto twice_r = static_cast<unsigned __int128>(r) * 2U;
  if (twice_r > denominator || (twice_r == denominator && q % 2 == 1)) ++q;
  auto digits = std::to_string(q);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  digits.insert(digits.size() - 2, ".");
  return digits;
}

std::string format_roundtrip(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
  return value;
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

}  // namespace empatheval
