#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "neuboots/io/csv.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/grad.hpp"
#include "neuboots/nn/loss.hpp"
#include "neuboots/rng.hpp"

namespace neuboots::testing {

inline std::string fixture_path(std::string_view name) {
  return std::string(NEUBOOTS_FIXTURE_DIR) + "/" + std::string(name);
}

inline nlohmann::json expected_values() {
  std::ifstream in(fixture_path("expected.json"));
  return nlohmann::json::parse(in);
}

inline io::CsvTable fixture_table(std::string_view name) { return io::read_csv(fixture_path(name)); }

inline double cell(const io::CsvTable& t, std::size_t row, std::size_t col) {
  return std::stod(t.rows[row][col]);
}

// Initialized net with biases and weights jittered so no parameter is zero.
inline nn::DenseNet random_net(const nn::ArchSpec& arch, Rng& rng) {
  nn::DenseNet net = nn::DenseNet::initialize(arch, rng);
  for (auto& layer : net.mutable_layers()) {
    for (double& b : layer.bias) b = rng.normal(0.0, 0.3);
  }
  return net;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sd = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.normal(0.0, sd);
  return m;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t parameters = 0;
};

// Central differences of nn::loss against nn::grad for every parameter.
inline GradCheck check_gradients(nn::DenseNet net, const nn::Batch& batch, nn::LossKind kind,
                                 const nn::ForwardOptions& opts = {}, double h = 1e-6) {
  const nn::Gradients g = nn::grad(net, batch, kind, opts);
  auto objective = [&](const nn::DenseNet& n) {
    return nn::loss(nn::forward(n, batch.x, opts), batch.y, batch.weights, kind);
  };
  GradCheck out;
  auto compare = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = objective(net);
    param = saved - h;
    const double down = objective(net);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
    ++out.parameters;
  };
  auto layers = net.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weight.flat();
    const auto gw = g.layers[l].weight.flat();
    for (std::size_t j = 0; j < w.size(); ++j) compare(w[j], gw[j]);
    for (std::size_t j = 0; j < layers[l].bias.size(); ++j) compare(layers[l].bias[j], g.layers[l].bias[j]);
  }
  return out;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace neuboots::testing
