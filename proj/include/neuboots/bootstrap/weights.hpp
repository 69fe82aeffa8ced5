#pragma once

// Bootstrap weight machinery: Dirichlet / multinomial block weights,
// class-stratified block assignment and block-to-sample expansion.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "neuboots/rng.hpp"

namespace neuboots::bootstrap {

enum class AlphaKind { dirichlet, multinomial };

// Block weights. Dirichlet: strictly positive, sum S (up to rounding).
// Multinomial: nonnegative integer counts, sum exactly S.
struct BootstrapAlpha {
  std::vector<double> alpha;
  AlphaKind kind = AlphaKind::dirichlet;

  std::size_t size() const noexcept { return alpha.size(); }
  static BootstrapAlpha ones(std::size_t blocks);
};

// u : [n] -> [S]
struct BlockAssignment {
  std::vector<std::size_t> block_of;     // u(i)
  std::size_t num_blocks = 0;            // S
  std::vector<std::size_t> block_sizes;  // |I_s|

  std::size_t num_samples() const noexcept { return block_of.size(); }
};

// S * Dirichlet(1, ..., 1) via normalized unit exponentials.
BootstrapAlpha sample_dirichlet_alpha(std::size_t blocks, Rng& rng);
// Counts of S equiprobable draws into S cells.
BootstrapAlpha sample_multinomial_alpha(std::size_t blocks, Rng& rng);

// Stratified round-robin: each class is shuffled and dealt across blocks,
// the leftover of every class going to blocks in a fresh shuffled order, so
// per-class counts differ by at most one between any two blocks. Without
// labels (regression) the samples form a single stratum.
// Throws ConfigError unless 1 <= S <= n.
BlockAssignment assign_blocks(std::optional<std::span<const std::size_t>> labels,
                              std::size_t num_samples, std::size_t blocks, Rng& rng);

// w_i = alpha_{u(i)}. Throws DimensionError on length mismatch.
std::vector<double> expand_weights(const BootstrapAlpha& alpha, const BlockAssignment& u);

// Per-sample Dirichlet weights n * Dirichlet(1, ..., 1) (non-block RWB).
std::vector<double> sample_dirichlet_weights(std::size_t n, Rng& rng);

// n indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> resample_indices(std::size_t n, Rng& rng);

}  // namespace neuboots::bootstrap
