#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuboots/generator/generator.hpp"

namespace neuboots::generator {

// Sample quantile with linear interpolation between order statistics
// (Hyndman-Fan type 7: position h = (n - 1) q, interpolate x[floor h] .. x[ceil h]).
double quantile_sorted(std::span<const double> sorted, double q);
double quantile(std::vector<double> values, double q);

struct ConfidenceBand {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> mean;
};

// Pointwise band over the replicates for output column `output_index`:
// quantiles (1 - level)/2 and 1 - (1 - level)/2, plus the ensemble mean.
// Throws ConfigError unless 0 < level < 1.
ConfidenceBand confidence_band(const PredictionEnsemble& ensemble, double level,
                               std::size_t output_index = 0);

}  // namespace neuboots::generator
