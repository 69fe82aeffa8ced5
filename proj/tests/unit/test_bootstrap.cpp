#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "neuboots/bootstrap/weights.hpp"
#include "neuboots/error.hpp"
#include "neuboots/rng.hpp"

using namespace neuboots;
using namespace neuboots::bootstrap;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
  }
  return d;
}

// counts[c][s]: samples of class c in block s.
std::vector<std::vector<std::size_t>> class_block_counts(const BlockAssignment& u,
                                                         const std::vector<std::size_t>& labels,
                                                         std::size_t k) {
  std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(u.num_blocks, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[labels[i]][u.block_of[i]];
  return counts;
}

void check_partition(const BlockAssignment& u, std::size_t n) {
  REQUIRE(u.block_of.size() == n);
  std::vector<std::size_t> sizes(u.num_blocks, 0);
  for (std::size_t b : u.block_of) {
    REQUIRE(b < u.num_blocks);
    ++sizes[b];
  }
  CHECK(sizes == u.block_sizes);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
  CHECK(*std::min_element(sizes.begin(), sizes.end()) >= 1);
}

}  // namespace

TEST_SUITE("bootstrap") {
  TEST_CASE("one block always gets weight one") {
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
      CHECK(sample_dirichlet_alpha(1, rng).alpha == std::vector<double>{1.0});
      CHECK(sample_multinomial_alpha(1, rng).alpha == std::vector<double>{1.0});
    }
  }

  TEST_CASE("dirichlet draws are positive and sum to S") {
    Rng rng(2);
    for (std::size_t s : {2u, 7u, 64u, 500u}) {
      for (int i = 0; i < 50; ++i) {
        const auto a = sample_dirichlet_alpha(s, rng);
        CHECK(a.kind == AlphaKind::dirichlet);
        CHECK(a.size() == s);
        CHECK(*std::min_element(a.alpha.begin(), a.alpha.end()) > 0.0);
        CHECK(std::abs(std::accumulate(a.alpha.begin(), a.alpha.end(), 0.0) - double(s)) <= 1e-9);
      }
    }
  }

  TEST_CASE("dirichlet moments at S = 100") {
    Rng rng(3);
    constexpr std::size_t S = 100, draws = 100000;
    std::vector<double> mean(S, 0.0);
    double sq = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      const auto a = sample_dirichlet_alpha(S, rng);
      for (std::size_t s = 0; s < S; ++s) {
        mean[s] += a.alpha[s];
        sq += (a.alpha[s] - 1.0) * (a.alpha[s] - 1.0);
      }
    }
    for (double& m : mean) m /= draws;
    for (double m : mean) CHECK(std::abs(m - 1.0) <= 0.02);
    // Var of S * Beta(1, S - 1) is (S - 1) / (S + 1).
    CHECK(std::abs(sq / double(S * draws) - 99.0 / 101.0) <= 0.02);
  }

  TEST_CASE("first and last coordinates share one law") {
    Rng rng(4);
    constexpr std::size_t S = 50, draws = 100000;
    std::vector<double> first(draws), last(draws);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto a = sample_dirichlet_alpha(S, rng);
      first[d] = a.alpha.front();
      last[d] = a.alpha.back();
    }
    // Critical value at level 0.01 for equal sample sizes n: 1.628 sqrt(2 / n).
    CHECK(ks_statistic(first, last) < 1.628 * std::sqrt(2.0 / draws));
  }

  TEST_CASE("dirichlet weights have exponential tails at S = 200") {
    Rng rng(5);
    constexpr std::size_t S = 200, draws = 100000;
    std::vector<double> first(draws);
    for (auto& v : first) v = sample_dirichlet_alpha(S, rng).alpha[0];
    for (int t = 2; t <= 10; ++t) {
      const double tail = double(std::count_if(first.begin(), first.end(), [&](double v) { return v >= t; })) / draws;
      CAPTURE(t);
      CHECK(tail <= std::exp(-t + 0.2));
    }
  }

  TEST_CASE("multinomial draws are integer counts summing to S") {
    Rng rng(6);
    for (std::size_t s : {3u, 20u, 200u}) {
      const auto a = sample_multinomial_alpha(s, rng);
      CHECK(a.kind == AlphaKind::multinomial);
      double total = 0.0;
      for (double v : a.alpha) {
        CHECK(v >= 0.0);
        CHECK(v == std::floor(v));
        total += v;
      }
      CHECK(total == double(s));
    }
  }

  TEST_CASE("multinomial leaves about 37% of cells empty at S = 200") {
    Rng rng(7);
    constexpr std::size_t S = 200, draws = 5000;
    std::size_t zeros = 0;
    for (std::size_t d = 0; d < draws; ++d) {
      const auto a = sample_multinomial_alpha(S, rng);
      zeros += std::count(a.alpha.begin(), a.alpha.end(), 0.0);
    }
    CHECK(std::abs(double(zeros) / double(S * draws) - std::pow(1.0 - 1.0 / S, double(S))) <= 0.01);
  }

  TEST_CASE("n = S gives a permutation") {
    Rng rng(8);
    const auto u = assign_blocks(std::nullopt, 12, 12, rng);
    check_partition(u, 12);
    std::set<std::size_t> seen(u.block_of.begin(), u.block_of.end());
    CHECK(seen.size() == 12);
  }

  TEST_CASE("divisible strata are dealt exactly") {
    Rng rng(9);
    std::vector<std::size_t> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = i % 2;
    std::span<const std::size_t> view(labels);
    const auto u = assign_blocks(view, 100, 10, rng);
    check_partition(u, 100);
    for (const auto& per_class : class_block_counts(u, labels, 2)) {
      for (std::size_t c : per_class) CHECK(c == 5);
    }
  }

  TEST_CASE("classes of 4 and 3 over 3 blocks, enumerated over seeds") {
    const std::vector<std::size_t> labels{0, 1, 0, 0, 1, 0, 1};
    std::map<std::vector<std::size_t>, int> patterns;
    constexpr int seeds = 3000;
    for (int seed = 0; seed < seeds; ++seed) {
      Rng rng(seed);
      std::span<const std::size_t> view(labels);
      const auto u = assign_blocks(view, 7, 3, rng);
      check_partition(u, 7);
      const auto counts = class_block_counts(u, labels, 2);
      for (const auto& per_class : counts) {
        const auto [lo, hi] = std::minmax_element(per_class.begin(), per_class.end());
        REQUIRE(*hi - *lo <= 1);
      }
      // Class 1 (three samples) must land one per block; class 0 as 2/1/1.
      CHECK(counts[1] == std::vector<std::size_t>{1, 1, 1});
      ++patterns[counts[0]];
    }
    // Exactly the three arrangements of (2, 1, 1) occur.
    CHECK(patterns.size() == 3);
    for (const auto& [pattern, n] : patterns) {
      CHECK(std::accumulate(pattern.begin(), pattern.end(), std::size_t{0}) == 4);
      CHECK(std::abs(double(n) / seeds - 1.0 / 3.0) < 0.05);
    }
  }

  TEST_CASE("random strata stay balanced within one") {
    Rng rng(10);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 20 + rng.below(200);
      const std::size_t k = 1 + rng.below(5);
      std::vector<std::size_t> labels(n);
      for (auto& l : labels) l = rng.below(k);
      const std::size_t s = 1 + rng.below(n);
      std::span<const std::size_t> view(labels);
      const auto u = assign_blocks(view, n, s, rng);
      REQUIRE(u.block_of.size() == n);
      for (const auto& per_class : class_block_counts(u, labels, k)) {
        const auto [lo, hi] = std::minmax_element(per_class.begin(), per_class.end());
        CHECK(*hi - *lo <= 1);
      }
      if (s <= n) {
        std::vector<std::size_t> sizes(s, 0);
        for (auto b : u.block_of) ++sizes[b];
        CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
      }
    }
  }

  TEST_CASE("regression assignment is a balanced partition") {
    Rng rng(11);
    const auto u = assign_blocks(std::nullopt, 103, 10, rng);
    check_partition(u, 103);
    const auto [lo, hi] = std::minmax_element(u.block_sizes.begin(), u.block_sizes.end());
    CHECK(*hi - *lo <= 1);
  }

  TEST_CASE("invalid block counts are rejected") {
    Rng rng(12);
    CHECK_THROWS_AS(assign_blocks(std::nullopt, 5, 6, rng), ConfigError);
    CHECK_THROWS_AS(assign_blocks(std::nullopt, 5, 0, rng), ConfigError);
  }

  TEST_CASE("expand_weights examples") {
    BlockAssignment u;
    u.block_of = {0, 1, 0};
    u.num_blocks = 2;
    u.block_sizes = {2, 1};
    CHECK(expand_weights(BootstrapAlpha::ones(2), u) == std::vector<double>{1.0, 1.0, 1.0});
    BootstrapAlpha a{{0.5, 1.5}, AlphaKind::dirichlet};
    CHECK(expand_weights(a, u) == std::vector<double>{0.5, 1.5, 0.5});
    CHECK_THROWS_AS(expand_weights(BootstrapAlpha::ones(3), u), DimensionError);
  }

  TEST_CASE("expanded sample weights average to one") {
    Rng rng(13);
    const auto u = assign_blocks(std::nullopt, 20, 10, rng);
    std::vector<double> mean(20, 0.0);
    constexpr int draws = 100000;
    for (int d = 0; d < draws; ++d) {
      const auto w = expand_weights(sample_dirichlet_alpha(10, rng), u);
      for (std::size_t i = 0; i < 20; ++i) mean[i] += w[i];
    }
    for (double m : mean) CHECK(std::abs(m / draws - 1.0) <= 0.02);
  }

  TEST_CASE("resampling keeps about 63% of distinct indices at n = 1000") {
    Rng rng(14);
    double distinct = 0.0;
    constexpr int draws = 400;
    for (int d = 0; d < draws; ++d) {
      const auto idx = resample_indices(1000, rng);
      REQUIRE(idx.size() == 1000);
      distinct += double(std::set<std::size_t>(idx.begin(), idx.end()).size()) / 1000.0;
    }
    CHECK(std::abs(distinct / draws - (1.0 - std::pow(1.0 - 1e-3, 1000.0))) <= 0.01);
  }

  TEST_CASE("per-sample dirichlet weights are positive and sum to n") {
    Rng rng(15);
    const auto w = sample_dirichlet_weights(777, rng);
    CHECK(*std::min_element(w.begin(), w.end()) > 0.0);
    CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 777.0) <= 1e-6);
  }

  TEST_CASE("rng streams are reproducible and split independently") {
    Rng a(42), b(42);
    for (int i = 0; i < 5; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    Rng c(42);
    Rng child = c.split();
    CHECK(child.next_u64() != c.next_u64());
    for (int i = 0; i < 1000; ++i) {
      const double u = c.uniform_open();
      CHECK(u > 0.0);
      CHECK(u < 1.0);
      CHECK(c.below(7) < 7);
    }
  }
}
