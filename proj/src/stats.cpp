#include "empatheval/stats.hpp"

#include <cmath>

namespace empatheval {

std::optional<AggregateStat> aggregate(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  AggregateStat stat{mean, values.size() == 1 ? 0.0 : std::sqrt(ss / n), values.size()};
  return stat;
}

}  // namespace empatheval
