#include "neuboots/generator/band.hpp"

#include <algorithm>
#include <cmath>

#include "neuboots/error.hpp"

namespace neuboots::generator {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

ConfidenceBand confidence_band(const PredictionEnsemble& ensemble, double level,
                               std::size_t output_index) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  if (output_index >= ensemble.output_dim()) throw DimensionError("band output index out of range");
  const double tail = (1.0 - level) / 2.0;
  const std::size_t B = ensemble.replicates();
  ConfidenceBand band;
  std::vector<double> column(B);
  for (std::size_t i = 0; i < ensemble.inputs(); ++i) {
    // Mean as an offset from the first replicate: exact for constant samples.
    const double anchor = ensemble.sample(0, i)[output_index];
    double offset = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      column[b] = ensemble.sample(b, i)[output_index];
      offset += column[b] - anchor;
    }
    std::sort(column.begin(), column.end());
    band.lower.push_back(quantile_sorted(column, tail));
    band.upper.push_back(quantile_sorted(column, 1.0 - tail));
    band.mean.push_back(anchor + offset / static_cast<double>(B));
  }
  return band;
}

}  // namespace neuboots::generator
