#pragma once

// Desk-scale synthetic tasks.
//
// Regression: x ~ Uniform(-3, 3), y = f(x) + N(0, noise_sd^2) with
//   sine    f(x) = sin(x)
//   step    f(x) = -0.5 for x < 0, 0.5 otherwise
//   bumps   f(x) = exp(-2 (x + 1.5)^2) - exp(-2 (x - 1.5)^2) + 0.8 exp(-8 x^2)
//   linear  f(x) = 0.5 x + 0.2
//
// Classification, 2-D features unless dim says otherwise:
//   two_moons  class 0: (cos t, sin t), class 1: (1 - cos t, 0.5 - sin t - separation),
//              t ~ Uniform(0, pi), plus N(0, noise^2) jitter per coordinate.
//   gaussians  k classes, class c centred at separation * (cos 2 pi c / k, sin 2 pi c / k),
//              isotropic sd `noise`.
//   imbalanced_gaussians  as gaussians with an explicit per-class count vector.
// Every generator adds `shift` to each feature coordinate (out-of-distribution
// copies) and then flips each label to a different uniformly chosen class with
// probability label_noise. Rows are shuffled.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "neuboots/nn/dataset.hpp"
#include "neuboots/rng.hpp"

namespace neuboots::experiments {

inline constexpr double kRegressionLower = -3.0;
inline constexpr double kRegressionUpper = 3.0;

enum class RegressionFunction { sine, step, bumps, linear };

RegressionFunction parse_regression_function(std::string_view name);
std::string_view to_string(RegressionFunction f) noexcept;
double true_function(RegressionFunction f, double x) noexcept;

struct RegressionSample {
  nn::Dataset data;
  RegressionFunction function;
  std::vector<double> truth;  // f(x_i) per row

  double operator()(double x) const noexcept { return true_function(function, x); }
};

// Throws ConfigError for n < 10, a negative noise_sd or an unknown name.
RegressionSample synth_regression(std::string_view name, std::size_t n, double noise_sd, Rng& rng);

struct ClassificationParams {
  double noise = 0.1;
  double separation = 0.0;   // two_moons: extra vertical gap; gaussians: radius of the class means
  double label_noise = 0.0;
  std::size_t num_classes = 2;
  std::size_t dim = 2;       // gaussians only; extra coordinates have mean 0
  std::vector<std::size_t> counts;  // imbalanced_gaussians only, one per class
  double shift = 0.0;
};

// Class means of the gaussians generators, [k x dim], before any shift.
std::vector<std::vector<double>> gaussian_class_means(const ClassificationParams& params);

// Throws ConfigError for unknown names (listing the choices), n too small for
// the class count, or a count vector whose length differs from num_classes.
// For imbalanced_gaussians the total size is the sum of counts and n is ignored.
nn::Dataset synth_classification(std::string_view name, std::size_t n, const ClassificationParams& params,
                                 Rng& rng);

}  // namespace neuboots::experiments
