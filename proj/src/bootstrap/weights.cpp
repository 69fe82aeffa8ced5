#include "neuboots/bootstrap/weights.hpp"

#include <numeric>
#include <string>

#include "neuboots/error.hpp"

namespace neuboots::bootstrap {

BootstrapAlpha BootstrapAlpha::ones(std::size_t blocks) {
  return {std::vector<double>(blocks, 1.0), AlphaKind::dirichlet};
}

BootstrapAlpha sample_dirichlet_alpha(std::size_t blocks, Rng& rng) {
  if (blocks == 0) throw ConfigError("number of blocks must be positive");
  BootstrapAlpha out{std::vector<double>(blocks), AlphaKind::dirichlet};
  double total = 0.0;
  for (double& z : out.alpha) {
    z = rng.exponential();
    total += z;
  }
  // Dividing last keeps S = 1 exactly at 1.
  const double s = static_cast<double>(blocks);
  for (double& z : out.alpha) z = z * s / total;
  return out;
}

BootstrapAlpha sample_multinomial_alpha(std::size_t blocks, Rng& rng) {
  if (blocks == 0) throw ConfigError("number of blocks must be positive");
  BootstrapAlpha out{std::vector<double>(blocks, 0.0), AlphaKind::multinomial};
  for (std::size_t draw = 0; draw < blocks; ++draw) out.alpha[rng.below(blocks)] += 1.0;
  return out;
}

BlockAssignment assign_blocks(std::optional<std::span<const std::size_t>> labels,
                              std::size_t num_samples, std::size_t blocks, Rng& rng) {
  if (blocks == 0 || blocks > num_samples) {
    throw ConfigError("block count " + std::to_string(blocks) + " must lie in [1, n = " +
                      std::to_string(num_samples) + "]");
  }
  if (labels && labels->size() != num_samples) {
    throw DimensionError("label count does not match sample count");
  }

  // Group indices into strata.
  std::vector<std::vector<std::size_t>> strata;
  if (labels) {
    for (std::size_t i = 0; i < num_samples; ++i) {
      const std::size_t c = (*labels)[i];
      if (c >= strata.size()) strata.resize(c + 1);
      strata[c].push_back(i);
    }
  } else {
    strata.emplace_back(num_samples);
    std::iota(strata[0].begin(), strata[0].end(), std::size_t{0});
  }

  BlockAssignment u;
  u.num_blocks = blocks;
  u.block_of.assign(num_samples, 0);
  u.block_sizes.assign(blocks, 0);

  // Leftovers of all strata walk one shuffled cyclic block order. A stratum
  // has fewer than S leftovers, so they land in distinct blocks; continuing
  // the cycle keeps block totals within one of each other.
  std::vector<std::size_t> block_order(blocks);
  std::iota(block_order.begin(), block_order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(block_order));
  std::size_t cursor = 0;

  for (auto& members : strata) {
    if (members.empty()) continue;
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t full_rounds = members.size() / blocks;
    std::size_t pos = 0;
    for (std::size_t round = 0; round < full_rounds; ++round) {
      for (std::size_t s = 0; s < blocks; ++s) {
        u.block_of[members[pos++]] = s;
        ++u.block_sizes[s];
      }
    }
    while (pos < members.size()) {
      const std::size_t s = block_order[cursor];
      cursor = (cursor + 1) % blocks;
      u.block_of[members[pos++]] = s;
      ++u.block_sizes[s];
    }
  }
  return u;
}

std::vector<double> expand_weights(const BootstrapAlpha& alpha, const BlockAssignment& u) {
  if (alpha.size() != u.num_blocks) {
    throw DimensionError("alpha has " + std::to_string(alpha.size()) + " entries but assignment has " +
                         std::to_string(u.num_blocks) + " blocks");
  }
  std::vector<double> w(u.num_samples());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = alpha.alpha[u.block_of[i]];
  return w;
}

std::vector<double> sample_dirichlet_weights(std::size_t n, Rng& rng) {
  return sample_dirichlet_alpha(n, rng).alpha;
}

std::vector<std::size_t> resample_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}

}  // namespace neuboots::bootstrap
