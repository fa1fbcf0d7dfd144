// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Dense 2-D float64 tensors with define-by-run reverse-mode autodiff.
//
// Every op computes its value eagerly. When grad mode is on and at least one
// input requires a gradient, the result remembers its inputs and a closure
// that pushes the upstream gradient back into them. `Tensor::backward()` on a
// 1x1 result walks that graph in reverse topological order.
//
// Leaves with requires_grad == false never receive a gradient buffer, which
// is how parameter freezing keeps frozen accumulators exactly zero.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <utility>
#include <vector>

namespace wefofe {

struct Shape {
  size_t rows = 0;
  size_t cols = 0;
  size_t size() const noexcept { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

/// Fixed 64-byte alignment: Eigen's vectorized reductions peel a prefix that
/// depends on the buffer address, so a stable alignment keeps results
/// bit-reproducible across allocations.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

namespace detail {

struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;  // empty until something flows in
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  double* grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad.data();
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(size_t rows, size_t cols, bool requires_grad = false);
  static Tensor from(size_t rows, size_t cols, std::vector<double> values,
                     bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  Shape shape() const noexcept { return node_->shape; }
  size_t rows() const noexcept { return node_->shape.rows; }
  size_t cols() const noexcept { return node_->shape.cols; }
  size_t size() const noexcept { return node_->value.size(); }

  std::span<const double> values() const noexcept { return node_->value; }
  /// Direct write access, for initialization, optimizers and tests. Writes
  /// are not tracked by autodiff.
  std::span<double> mutable_values() noexcept { return node_->value; }
  double at(size_t r, size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const noexcept { return node_->requires_grad; }
  void set_requires_grad(bool on) noexcept { node_->requires_grad = on; }

  bool has_grad() const noexcept { return !node_->grad.empty(); }
  std::span<const double> grad() const noexcept { return node_->grad; }
  std::span<double> mutable_grad() { return {node_->grad_buffer(), size()}; }
  bool grad_all_zero() const noexcept;
  void zero_grad() noexcept;

  /// Accumulates d(this)/d(leaf) into every reachable leaf that requires a
  /// gradient. `this` must be 1x1.
  void backward() const;

  /// Same storage identity: used to assert embedding tying.
  const void* id() const noexcept { return node_.get(); }

  detail::Node& node() const noexcept { return *node_; }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled() noexcept;

/// When on, every op checks its output for NaN/Inf and throws a Numeric
/// error. Off by default.
void set_validation(bool on) noexcept;
bool validation_enabled() noexcept;

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
/// x + bias, bias is 1 x cols and is broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// x * w + b, fused.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
/// x * e^T + b, fused. Used for tied-embedding output logits.
Tensor affine_nt(const Tensor& x, const Tensor& e, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
/// Row-wise convex combination: out[r] = sum_i weights[r,i] * parts[i][r].
Tensor mix(const Tensor& weights, std::span<const Tensor> parts);
Tensor sum(const Tensor& x);

using SparseRow = std::vector<std::pair<size_t, double>>;
/// out[r] = sum over (id, coef) in rows[r] of coef * table[id]. Gradient
/// flows to `table` only.
Tensor weighted_gather(const Tensor& table, std::span<const SparseRow> rows);

/// Mean over rows of -log softmax(logits)[r, target[r]], stabilized by
/// row-max subtraction. Returns a 1x1 tensor.
Tensor softmax_cross_entropy(const Tensor& logits,
                             std::span<const size_t> targets);

/// Per-row negative log-probability of the target, no graph.
std::vector<double> row_nll(const Tensor& logits,
                            std::span<const size_t> targets);

}  // namespace wefofe
