#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neuboots/generator/band.hpp"

namespace neuboots::metrics {

// 1 where lower <= truth <= upper.
std::vector<std::uint8_t> band_covers(const generator::ConfidenceBand& band,
                                      std::span<const double> truth);

struct CoverageSummary {
  std::vector<double> per_point;  // fraction of replications covering each grid point
  double mean = 0.0;              // grid average
  std::size_t replications = 0;
};

// One band per replication, all on the same grid with the same truth.
CoverageSummary coverage_rate(std::span<const generator::ConfidenceBand> bands,
                              std::span<const double> truth);

}  // namespace neuboots::metrics
