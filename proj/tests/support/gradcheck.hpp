// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference oracle. Deliberately independent of the
// autodiff path: it only perturbs values and re-evaluates the scalar.

#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "wefofe/rng.hpp"
#include "wefofe/tensor.hpp"

namespace wefofe::testing {

inline std::vector<double> numeric_grad(const std::function<double()>& f, Tensor param,
                                        double eps = 1e-5) {
  auto v = param.mutable_values();
  std::vector<double> g(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double saved = v[i];
    v[i] = saved + eps;
    const double up = f();
    v[i] = saved - eps;
    const double down = f();
    v[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), with a floor for all-zero gradients.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-10});
  return std::sqrt(diff) / scale;
}

/// Analytic gradient of `loss()` w.r.t. each param vs finite differences.
/// Returns the worst relative error.
inline double gradcheck(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                        double eps = 1e-5) {
  for (auto& p : params) p.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) {
    analytic.emplace_back(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.back().begin());
  }
  auto scalar = [&] {
    NoGradGuard ng;
    return loss().item();
  };
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto numeric = numeric_grad(scalar, params[i], eps);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  for (auto& p : params) p.zero_grad();
  return worst;
}

inline Tensor random_tensor(Rng& rng, size_t rows, size_t cols, double scale = 1.0,
                            bool requires_grad = true) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = scale * rng.normal();
  return Tensor::from(rows, cols, std::move(v), requires_grad);
}

/// Keeps values away from the ReLU kink so finite differences stay valid.
inline Tensor random_away_from_zero(Rng& rng, size_t rows, size_t cols, double margin = 0.05) {
  std::vector<double> v(rows * cols);
  for (double& x : v) {
    x = rng.normal();
    if (std::abs(x) < margin) x = x < 0 ? x - margin : x + margin;
  }
  return Tensor::from(rows, cols, std::move(v), true);
}

}  // namespace wefofe::testing
