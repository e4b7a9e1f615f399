#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace empatheval {

/// Mean and population standard deviation (divide by n) of a sample.
struct AggregateStat {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;

  friend bool operator==(const AggregateStat&, const AggregateStat&) = default;
};

/// Two-pass mean/SD, summing in the order given. Empty input has no statistic.
std::optional<AggregateStat> aggregate(std::span<const double> values);

}  // namespace empatheval
