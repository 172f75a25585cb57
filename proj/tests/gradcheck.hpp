#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cag/nn.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0.0;
  std::size_t probed = 0;
};

/// Central differences of L = sum(w * net(x)) against the analytic backward
/// pass, over `probes` coordinates drawn from the input and every parameter.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline Result check(const std::vector<cag::LayerSpec>& specs, const std::vector<std::size_t>& input_shape,
                    std::uint64_t seed, std::size_t probes = 64, double h = 1e-6, double floor = 1e-6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  cag::Network net(specs, seed * 7919 + 1);

  cag::Tensor x(input_shape);
  for (auto& v : x.data) {
    v = u(rng);
    // keep clear of the relu kink
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
  }
  const cag::Tensor y0 = net.forward(x);
  cag::Tensor w(y0.shape);
  for (auto& v : w.data) v = u(rng);

  auto loss = [&](const cag::Tensor& in) {
    const auto y = net.forward(in);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w.data[i] * y.data[i];
    return s;
  };

  net.zero_grad();
  net.forward(x);
  const cag::Tensor gx = net.backward(w);
  std::vector<std::vector<double>> gp;
  for (auto* p : net.params()) gp.push_back(p->grad);

  // slot 0 is the input; slot i > 0 is parameter tensor i - 1
  std::vector<std::size_t> sizes{x.size()};
  for (auto* p : net.params()) sizes.push_back(p->values.size());
  std::vector<double*> bases{x.data.data()};
  for (auto* p : net.params()) bases.push_back(p->values.data());
  std::size_t total = 0;
  for (auto s : sizes) total += s;

  Result r;
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (std::size_t k = 0; k < probes; ++k) {
    std::size_t flat = pick(rng), slot = 0;
    while (flat >= sizes[slot]) flat -= sizes[slot++];
    double& coord = bases[slot][flat];
    const double saved = coord;
    coord = saved + h;
    const double up = loss(x);
    coord = saved - h;
    const double down = loss(x);
    coord = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = slot == 0 ? gx.data[flat] : gp[slot - 1][flat];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic - numeric) / denom);
    ++r.probed;
  }
  return r;
}

struct Case {
  const char* name;
  std::vector<cag::LayerSpec> specs;
  std::vector<std::size_t> input_shape;
};

/// One case per layer kind and activation, with a few composite stacks.
inline std::vector<Case> layer_cases() {
  using cag::ActivationKind;
  using cag::LayerSpec;
  return {
      {"dense", {LayerSpec::dense(5, 4)}, {3, 5}},
      {"dense_3d", {LayerSpec::dense(4, 3)}, {2, 6, 4}},
      {"conv1d_k3", {LayerSpec::conv1d(2, 3, 3)}, {2, 2, 9}},
      {"conv1d_k5", {LayerSpec::conv1d(3, 2, 5)}, {2, 3, 8}},
      {"lstm_sequence", {LayerSpec::lstm(3, 4, 1, true)}, {2, 5, 3}},
      {"lstm_final_2layer", {LayerSpec::lstm(2, 3, 2, false)}, {2, 6, 2}},
      {"tanh", {LayerSpec::act(ActivationKind::Tanh)}, {3, 7}},
      {"relu", {LayerSpec::act(ActivationKind::Relu)}, {3, 7}},
      {"leaky_relu", {LayerSpec::act(ActivationKind::LeakyRelu)}, {3, 7}},
      {"sigmoid", {LayerSpec::act(ActivationKind::Sigmoid)}, {3, 7}},
      {"flatten", {LayerSpec::flatten(), LayerSpec::dense(12, 2)}, {2, 3, 4}},
      {"reshape", {LayerSpec::reshape({2, 5}), LayerSpec::conv1d(2, 2, 3)}, {2, 10}},
      {"repeat", {LayerSpec::repeat(4), LayerSpec::lstm(3, 2, 1, true)}, {2, 3}},
  };
}

}  // namespace gradcheck
