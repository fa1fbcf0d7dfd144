// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <unordered_set>

#include "wefofe/error.hpp"

namespace wefofe {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<RowVec>;

thread_local bool g_grad_mode = true;
std::atomic<bool> g_validate{false};

ConstMatMap cview(const detail::Node& n) {
  return ConstMatMap(n.value.data(), static_cast<Eigen::Index>(n.shape.rows),
                     static_cast<Eigen::Index>(n.shape.cols));
}
MatMap gview(detail::Node& n) {
  return MatMap(n.grad_buffer(), static_cast<Eigen::Index>(n.shape.rows),
                static_cast<Eigen::Index>(n.shape.cols));
}
ConstMatMap gcview(const detail::Node& n) {
  return ConstMatMap(n.grad.data(), static_cast<Eigen::Index>(n.shape.rows),
                     static_cast<Eigen::Index>(n.shape.cols));
}

std::string shape_str(Shape s) {
  return "(" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + ")";
}

void check_finite(const detail::Node& n, const char* op) {
  if (!g_validate.load(std::memory_order_relaxed)) return;
  for (double v : n.value)
    if (!std::isfinite(v))
      fail(ErrorKind::Numeric, std::string("non-finite value produced by ") + op);
}

// Builds the output node; attaches parents and a backward closure only when
// recording is on and some input needs a gradient.
Tensor make_result(Shape shape, Buffer value,
                   std::vector<std::shared_ptr<detail::Node>> parents,
                   std::function<void(detail::Node&)> backward, const char* op) {
  auto n = std::make_shared<detail::Node>();
  n->shape = shape;
  n->value = std::move(value);
  check_finite(*n, op);
  if (g_grad_mode) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const auto& p) { return p->requires_grad; });
    if (any) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward = std::move(backward);
    }
  }
  return Tensor(std::move(n));
}

}  // namespace

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(size_t rows, size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::from(size_t rows, size_t cols, std::vector<double> values,
                    bool requires_grad) {
  require(values.size() == rows * cols, ErrorKind::Dimension,
          "tensor value count " + std::to_string(values.size()) +
              " does not match shape " + shape_str({rows, cols}));
  auto n = std::make_shared<detail::Node>();
  n->shape = {rows, cols};
  n->value.assign(values.begin(), values.end());
  n->requires_grad = requires_grad;
  check_finite(*n, "tensor construction");
  return Tensor(std::move(n));
}

double Tensor::item() const {
  require(size() == 1, ErrorKind::Dimension,
          "item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::grad_all_zero() const noexcept {
  return std::all_of(node_->grad.begin(), node_->grad.end(),
                     [](double g) { return g == 0.0; });
}

void Tensor::zero_grad() noexcept {
  node_->grad.clear();
  node_->grad.shrink_to_fit();
}

void Tensor::backward() const {
  require(size() == 1, ErrorKind::Dimension,
          "backward() requires a 1x1 tensor, got " + shape_str(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      detail::Node* p = n->parents[i++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  // Intermediate gradients are no longer needed.
  for (detail::Node* n : order)
    if (n->backward) n->grad.clear();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }
bool grad_mode_enabled() noexcept { return g_grad_mode; }

void set_validation(bool on) noexcept { g_validate.store(on); }
bool validation_enabled() noexcept { return g_validate.load(); }

// --- ops --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), ErrorKind::Dimension,
          "matmul shape mismatch " + shape_str(a.shape()) + " * " +
              shape_str(b.shape()));
  const Shape out{a.rows(), b.cols()};
  Buffer v(out.size());
  MatMap(v.data(), out.rows, out.cols).noalias() = cview(a.node()) * cview(b.node());
  return make_result(
      out, std::move(v), {a.node_ptr(), b.node_ptr()},
      [](detail::Node& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        const auto dC = gcview(self);
        if (A.requires_grad) gview(A).noalias() += dC * cview(B).transpose();
        if (B.requires_grad) gview(B).noalias() += cview(A).transpose() * dC;
      },
      "matmul");
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), ErrorKind::Dimension,
          "matmul_nt shape mismatch " + shape_str(a.shape()) + " * " +
              shape_str(b.shape()) + "^T");
  const Shape out{a.rows(), b.rows()};
  Buffer v(out.size());
  MatMap(v.data(), out.rows, out.cols).noalias() =
      cview(a.node()) * cview(b.node()).transpose();
  return make_result(
      out, std::move(v), {a.node_ptr(), b.node_ptr()},
      [](detail::Node& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        const auto dC = gcview(self);
        if (A.requires_grad) gview(A).noalias() += dC * cview(B);
        if (B.requires_grad) gview(B).noalias() += dC.transpose() * cview(A);
      },
      "matmul_nt");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorKind::Dimension,
          "add shape mismatch " + shape_str(a.shape()) + " + " +
              shape_str(b.shape()));
  Buffer v(a.size());
  const auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] = av[i] + bv[i];
  return make_result(
      a.shape(), std::move(v), {a.node_ptr(), b.node_ptr()},
      [](detail::Node& self) {
        for (auto& p : self.parents) {
          if (!p->requires_grad) continue;
          double* g = p->grad_buffer();
          for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
      },
      "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorKind::Dimension,
          "mul shape mismatch " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  Buffer v(a.size());
  const auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
  return make_result(
      a.shape(), std::move(v), {a.node_ptr(), b.node_ptr()},
      [](detail::Node& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        if (A.requires_grad) {
          double* g = A.grad_buffer();
          for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * B.value[i];
        }
        if (B.requires_grad) {
          double* g = B.grad_buffer();
          for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * A.value[i];
        }
      },
      "mul");
}

namespace {

void check_bias(const Tensor& x, const Tensor& bias, size_t width, const char* op) {
  require(bias.rows() == 1 && bias.cols() == width, ErrorKind::Dimension,
          std::string(op) + ": bias " + shape_str(bias.shape()) +
              " does not broadcast over " + shape_str(x.shape()));
}

void accumulate_bias_grad(detail::Node& bias, const detail::Node& self) {
  if (!bias.requires_grad) return;
  VecMap(bias.grad_buffer(), static_cast<Eigen::Index>(bias.shape.cols)) +=
      gcview(self).colwise().sum();
}

}  // namespace

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  check_bias(x, bias, x.cols(), "add_bias");
  Buffer v(x.values().begin(), x.values().end());
  MatMap(v.data(), x.rows(), x.cols()).rowwise() +=
      Eigen::Map<const RowVec>(bias.values().data(), x.cols());
  return make_result(
      x.shape(), std::move(v), {x.node_ptr(), bias.node_ptr()},
      [](detail::Node& self) {
        auto& X = *self.parents[0];
        if (X.requires_grad) gview(X) += gcview(self);
        accumulate_bias_grad(*self.parents[1], self);
      },
      "add_bias");
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.cols() == w.rows(), ErrorKind::Dimension,
          "affine shape mismatch " + shape_str(x.shape()) + " * " +
              shape_str(w.shape()));
  check_bias(x, b, w.cols(), "affine");
  const Shape out{x.rows(), w.cols()};
  Buffer v(out.size());
  auto y = MatMap(v.data(), out.rows, out.cols);
  y.noalias() = cview(x.node()) * cview(w.node());
  y.rowwise() += Eigen::Map<const RowVec>(b.values().data(), out.cols);
  return make_result(
      out, std::move(v), {x.node_ptr(), w.node_ptr(), b.node_ptr()},
      [](detail::Node& self) {
        auto& X = *self.parents[0];
        auto& W = *self.parents[1];
        const auto dY = gcview(self);
        if (X.requires_grad) gview(X).noalias() += dY * cview(W).transpose();
        if (W.requires_grad) gview(W).noalias() += cview(X).transpose() * dY;
        accumulate_bias_grad(*self.parents[2], self);
      },
      "affine");
}

Tensor affine_nt(const Tensor& x, const Tensor& e, const Tensor& b) {
  require(x.cols() == e.cols(), ErrorKind::Dimension,
          "affine_nt shape mismatch " + shape_str(x.shape()) + " * " +
              shape_str(e.shape()) + "^T");
  check_bias(x, b, e.rows(), "affine_nt");
  const Shape out{x.rows(), e.rows()};
  Buffer v(out.size());
  auto y = MatMap(v.data(), out.rows, out.cols);
  y.noalias() = cview(x.node()) * cview(e.node()).transpose();
  y.rowwise() += Eigen::Map<const RowVec>(b.values().data(), out.cols);
  return make_result(
      out, std::move(v), {x.node_ptr(), e.node_ptr(), b.node_ptr()},
      [](detail::Node& self) {
        auto& X = *self.parents[0];
        auto& E = *self.parents[1];
        const auto dY = gcview(self);
        if (X.requires_grad) gview(X).noalias() += dY * cview(E);
        if (E.requires_grad) gview(E).noalias() += dY.transpose() * cview(X);
        accumulate_bias_grad(*self.parents[2], self);
      },
      "affine_nt");
}

Tensor relu(const Tensor& x) {
  Buffer v(x.size());
  const auto xv = x.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_result(
      x.shape(), std::move(v), {x.node_ptr()},
      [](detail::Node& self) {
        auto& X = *self.parents[0];
        double* g = X.grad_buffer();
        for (size_t i = 0; i < self.grad.size(); ++i)
          if (X.value[i] > 0.0) g[i] += self.grad[i];
      },
      "relu");
}

Tensor softmax_rows(const Tensor& x) {
  const size_t R = x.rows(), C = x.cols();
  Buffer v(x.size());
  const auto xv = x.values();
  for (size_t r = 0; r < R; ++r) {
    const double* in = xv.data() + r * C;
    double* out = v.data() + r * C;
    const double m = *std::max_element(in, in + C);
    double z = 0.0;
    for (size_t c = 0; c < C; ++c) z += (out[c] = std::exp(in[c] - m));
    for (size_t c = 0; c < C; ++c) out[c] /= z;
  }
  return make_result(
      x.shape(), std::move(v), {x.node_ptr()},
      [R, C](detail::Node& self) {
        auto& X = *self.parents[0];
        double* g = X.grad_buffer();
        for (size_t r = 0; r < R; ++r) {
          const double* y = self.value.data() + r * C;
          const double* dy = self.grad.data() + r * C;
          double dot = 0.0;
          for (size_t c = 0; c < C; ++c) dot += y[c] * dy[c];
          for (size_t c = 0; c < C; ++c) g[r * C + c] += y[c] * (dy[c] - dot);
        }
      },
      "softmax_rows");
}

Tensor mix(const Tensor& weights, std::span<const Tensor> parts) {
  require(!parts.empty(), ErrorKind::Dimension, "mix needs at least one part");
  require(weights.cols() == parts.size(), ErrorKind::Dimension,
          "mix: " + std::to_string(weights.cols()) + " weight columns for " +
              std::to_string(parts.size()) + " parts");
  const Shape out = parts[0].shape();
  require(weights.rows() == out.rows, ErrorKind::Dimension,
          "mix: weight rows do not match part rows");
  for (const auto& p : parts)
    require(p.shape() == out, ErrorKind::Dimension, "mix: part shapes differ");

  const size_t R = out.rows, C = out.cols, M = parts.size();
  Buffer v(out.size(), 0.0);
  const auto w = weights.values();
  for (size_t i = 0; i < M; ++i) {
    const auto pv = parts[i].values();
    for (size_t r = 0; r < R; ++r) {
      const double wi = w[r * M + i];
      for (size_t c = 0; c < C; ++c) v[r * C + c] += wi * pv[r * C + c];
    }
  }
  std::vector<std::shared_ptr<detail::Node>> parents{weights.node_ptr()};
  for (const auto& p : parts) parents.push_back(p.node_ptr());
  return make_result(
      out, std::move(v), std::move(parents),
      [R, C, M](detail::Node& self) {
        auto& W = *self.parents[0];
        for (size_t i = 0; i < M; ++i) {
          auto& P = *self.parents[i + 1];
          if (W.requires_grad) {
            double* gw = W.grad_buffer();
            for (size_t r = 0; r < R; ++r) {
              double dot = 0.0;
              for (size_t c = 0; c < C; ++c)
                dot += self.grad[r * C + c] * P.value[r * C + c];
              gw[r * M + i] += dot;
            }
          }
          if (P.requires_grad) {
            double* gp = P.grad_buffer();
            for (size_t r = 0; r < R; ++r) {
              const double wi = W.value[r * M + i];
              for (size_t c = 0; c < C; ++c) gp[r * C + c] += wi * self.grad[r * C + c];
            }
          }
        }
      },
      "mix");
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result(
      {1, 1}, {s}, {x.node_ptr()},
      [](detail::Node& self) {
        auto& X = *self.parents[0];
        double* g = X.grad_buffer();
        for (size_t i = 0; i < X.value.size(); ++i) g[i] += self.grad[0];
      },
      "sum");
}

Tensor weighted_gather(const Tensor& table, std::span<const SparseRow> rows) {
  const size_t C = table.cols();
  const auto tv = table.values();
  Buffer v(rows.size() * C, 0.0);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [id, coef] : rows[r]) {
      require(id < table.rows(), ErrorKind::Index,
              "weighted_gather: row id " + std::to_string(id) +
                  " out of range for table with " + std::to_string(table.rows()) +
                  " rows");
      const double* src = tv.data() + id * C;
      double* dst = v.data() + r * C;
      for (size_t c = 0; c < C; ++c) dst[c] += coef * src[c];
    }
  }
  std::vector<SparseRow> kept;
  if (grad_mode_enabled() && table.requires_grad()) kept.assign(rows.begin(), rows.end());
  return make_result(
      {rows.size(), C}, std::move(v), {table.node_ptr()},
      [kept = std::move(kept), C](detail::Node& self) {
        auto& T = *self.parents[0];
        double* g = T.grad_buffer();
        for (size_t r = 0; r < kept.size(); ++r)
          for (const auto& [id, coef] : kept[r])
            for (size_t c = 0; c < C; ++c) g[id * C + c] += coef * self.grad[r * C + c];
      },
      "weighted_gather");
}

namespace {

void check_targets(const Tensor& logits, std::span<const size_t> targets) {
  require(targets.size() == logits.rows(), ErrorKind::Dimension,
          "cross entropy: " + std::to_string(targets.size()) + " targets for " +
              std::to_string(logits.rows()) + " rows");
  for (size_t t : targets)
    require(t < logits.cols(), ErrorKind::Index,
            "cross entropy: target " + std::to_string(t) + " out of range for " +
                std::to_string(logits.cols()) + " classes");
}

}  // namespace

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const size_t> targets) {
  check_targets(logits, targets);
  const size_t R = logits.rows(), C = logits.cols();
  require(R > 0, ErrorKind::Dimension, "cross entropy over zero rows");
  const auto lv = logits.values();
  const bool keep = grad_mode_enabled() && logits.requires_grad();
  Buffer probs(keep ? lv.size() : 0);
  double total = 0.0;
  for (size_t r = 0; r < R; ++r) {
    const double* in = lv.data() + r * C;
    const double m = *std::max_element(in, in + C);
    double z = 0.0;
    for (size_t c = 0; c < C; ++c) z += std::exp(in[c] - m);
    const double log_z = m + std::log(z);
    total += log_z - in[targets[r]];
    if (keep)
      for (size_t c = 0; c < C; ++c) probs[r * C + c] = std::exp(in[c] - log_z);
  }
  std::vector<size_t> tgt(targets.begin(), targets.end());
  return make_result(
      {1, 1}, {total / static_cast<double>(R)}, {logits.node_ptr()},
      [probs = std::move(probs), tgt = std::move(tgt), R, C](detail::Node& self) {
        auto& L = *self.parents[0];
        double* g = L.grad_buffer();
        const double scale = self.grad[0] / static_cast<double>(R);
        for (size_t r = 0; r < R; ++r) {
          for (size_t c = 0; c < C; ++c) g[r * C + c] += scale * probs[r * C + c];
          g[r * C + tgt[r]] -= scale;
        }
      },
      "softmax_cross_entropy");
}

std::vector<double> row_nll(const Tensor& logits, std::span<const size_t> targets) {
  check_targets(logits, targets);
  const size_t C = logits.cols();
  const auto lv = logits.values();
  std::vector<double> out(logits.rows());
  for (size_t r = 0; r < out.size(); ++r) {
    const double* in = lv.data() + r * C;
    const double m = *std::max_element(in, in + C);
    double z = 0.0;
    for (size_t c = 0; c < C; ++c) z += std::exp(in[c] - m);
    out[r] = m + std::log(z) - in[targets[r]];
  }
  return out;
}

}  // namespace wefofe
