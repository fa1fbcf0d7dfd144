// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wefofe/tensor.hpp"

namespace wefofe {

/// A named set of parameters that are frozen or trained together.
struct ParamGroup {
  std::string name;
  std::vector<std::string> tensor_names;
  std::vector<Tensor> tensors;
  bool trainable = true;

  size_t parameter_count() const;
  /// Applies `trainable` to requires_grad on every tensor, so frozen groups
  /// never accumulate gradients.
  void set_trainable(bool on);
};

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Plain SGD and bias-corrected Adam.
///
/// A step updates only tensors of trainable groups that received a gradient
/// since the last step; untouched tensors (e.g. a sub-network not selected by
/// the batch's routing key) keep their values and their Adam step count.
/// Every gradient accumulator is cleared afterwards.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  void step(std::span<ParamGroup> groups);
  static void zero_grad(std::span<ParamGroup> groups);

  const OptimizerConfig& config() const noexcept { return config_; }

  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
    uint64_t steps = 0;
  };
  /// Adam state keyed by "<group>/<tensor>" so it can be checkpointed.
  const std::map<std::string, Moments>& state() const noexcept { return state_; }
  std::map<std::string, Moments>& mutable_state() noexcept { return state_; }

 private:
  OptimizerConfig config_;
  std::map<std::string, Moments> state_;
};

}  // namespace wefofe
