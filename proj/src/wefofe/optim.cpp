// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/optim.hpp"

#include <cmath>

namespace wefofe {

size_t ParamGroup::parameter_count() const {
  size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

void ParamGroup::set_trainable(bool on) {
  trainable = on;
  for (auto& t : tensors) t.set_requires_grad(on);
}

void Optimizer::step(std::span<ParamGroup> groups) {
  for (auto& g : groups) {
    if (!g.trainable) continue;
    for (size_t i = 0; i < g.tensors.size(); ++i) {
      Tensor& t = g.tensors[i];
      if (!t.has_grad()) continue;
      auto w = t.mutable_values();
      const auto grad = t.grad();
      if (config_.kind == OptimizerKind::Sgd) {
        for (size_t j = 0; j < w.size(); ++j) w[j] -= config_.learning_rate * grad[j];
        continue;
      }
      auto& s = state_[g.name + "/" + g.tensor_names[i]];
      if (s.m.empty()) {
        s.m.assign(w.size(), 0.0);
        s.v.assign(w.size(), 0.0);
      }
      ++s.steps;
      const double b1 = config_.beta1, b2 = config_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.steps));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.steps));
      for (size_t j = 0; j < w.size(); ++j) {
        s.m[j] = b1 * s.m[j] + (1.0 - b1) * grad[j];
        s.v[j] = b2 * s.v[j] + (1.0 - b2) * grad[j] * grad[j];
        const double m_hat = s.m[j] / c1;
        const double v_hat = s.v[j] / c2;
        w[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }
  zero_grad(groups);
}

void Optimizer::zero_grad(std::span<ParamGroup> groups) {
  for (auto& g : groups)
    for (auto& t : g.tensors) t.zero_grad();
}

}  // namespace wefofe
