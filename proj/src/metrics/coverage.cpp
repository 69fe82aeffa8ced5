#include "neuboots/metrics/coverage.hpp"

#include "neuboots/error.hpp"

namespace neuboots::metrics {

std::vector<std::uint8_t> band_covers(const generator::ConfidenceBand& band,
                                      std::span<const double> truth) {
  if (band.lower.size() != truth.size() || band.upper.size() != truth.size()) {
    throw DimensionError("band and truth grids differ in length");
  }
  std::vector<std::uint8_t> hit(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hit[i] = band.lower[i] <= truth[i] && truth[i] <= band.upper[i] ? 1 : 0;
  }
  return hit;
}

CoverageSummary coverage_rate(std::span<const generator::ConfidenceBand> bands,
                              std::span<const double> truth) {
  if (bands.empty()) throw DataError("coverage needs at least one replication");
  CoverageSummary out;
  out.replications = bands.size();
  out.per_point.assign(truth.size(), 0.0);
  for (const auto& band : bands) {
    const auto hit = band_covers(band, truth);
    for (std::size_t i = 0; i < hit.size(); ++i) out.per_point[i] += hit[i];
  }
  double total = 0.0;
  for (double& c : out.per_point) {
    c /= static_cast<double>(bands.size());
    total += c;
  }
  out.mean = truth.empty() ? 0.0 : total / static_cast<double>(truth.size());
  return out;
}

}  // namespace neuboots::metrics
