// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Plain-loop re-implementation of the network formulas, reading weights by
// name from a model snapshot. Shares no code with the Tensor ops.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "wefofe/model.hpp"

namespace wefofe::testing {

struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> v;
  double& at(size_t r, size_t c) { return v[r * cols + c]; }
  double at(size_t r, size_t c) const { return v[r * cols + c]; }
};

class Weights {
 public:
  explicit Weights(const Model& m) {
    for (auto& t : m.snapshot()) by_name_[t.name] = Mat{t.shape.rows, t.shape.cols, t.values};
  }
  const Mat& operator()(const std::string& name) const { return by_name_.at(name); }

 private:
  std::map<std::string, Mat> by_name_;
};

inline Mat from_tensor(const Tensor& t) {
  return {t.rows(), t.cols(), {t.values().begin(), t.values().end()}};
}

// x W + b
inline Mat dense(const Mat& x, const Mat& w, const Mat& b) {
  Mat y{x.rows, w.cols, std::vector<double>(x.rows * w.cols)};
  for (size_t r = 0; r < x.rows; ++r)
    for (size_t c = 0; c < w.cols; ++c) {
      double s = b.v[c];
      for (size_t i = 0; i < x.cols; ++i) s += x.at(r, i) * w.at(i, c);
      y.at(r, c) = s;
    }
  return y;
}

inline Mat relu(Mat x) {
  for (double& e : x.v) e = std::max(e, 0.0);
  return x;
}

inline Mat plus(Mat a, const Mat& b) {
  for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

inline Mat stack(const Weights& w, const std::string& prefix, Mat x, size_t L) {
  for (size_t l = 0; l < L; ++l) {
    const std::string p = prefix + "layer" + std::to_string(l);
    x = relu(dense(x, w(p + ".weight"), w(p + ".bias")));
  }
  return x;
}

inline Mat bottleneck(const Weights& w, const std::string& prefix, const Mat& x) {
  const Mat h = relu(dense(x, w(prefix + "down.weight"), w(prefix + "down.bias")));
  return dense(h, w(prefix + "up.weight"), w(prefix + "up.bias"));
}

// proj, then logits against the (tied) embedding plus output bias.
inline Mat head(const Weights& w, const std::string& group, const Mat& h) {
  const Mat p = dense(h, w(group + "/proj.weight"), w(group + "/proj.bias"));
  const Mat& e = w("embedding/weight");
  const Mat& ob = w(group + "/output_bias");
  Mat y{p.rows, e.rows, std::vector<double>(p.rows * e.rows)};
  for (size_t r = 0; r < p.rows; ++r)
    for (size_t c = 0; c < e.rows; ++c) {
      double s = ob.v[c];
      for (size_t i = 0; i < p.cols; ++i) s += p.at(r, i) * e.at(c, i);
      y.at(r, c) = s;
    }
  return y;
}

inline Mat softmax(Mat x) {
  for (size_t r = 0; r < x.rows; ++r) {
    double m = -INFINITY, z = 0.0;
    for (size_t c = 0; c < x.cols; ++c) m = std::max(m, x.at(r, c));
    for (size_t c = 0; c < x.cols; ++c) z += std::exp(x.at(r, c) - m);
    for (size_t c = 0; c < x.cols; ++c) x.at(r, c) = std::exp(x.at(r, c) - m) / z;
  }
  return x;
}

// h = shared(x); c = subnet(h) + CAA(h) + h; y = c + dialect(c) + common(c).
inline Mat ad_caa_da(const Weights& w, const ArchitectureConfig& cfg, const Mat& codes,
                     RoutingKey key) {
  const std::string& app = cfg.applications[key.application];
  const std::string& dia = cfg.dialects[key.dialect];
  const Mat h = stack(w, "shared_block/", codes, cfg.L);
  const Mat c = plus(plus(stack(w, "subnet:" + app + "/", h, cfg.L),
                          bottleneck(w, "caa:adapter/", h)),
                     h);
  const Mat y = plus(plus(c, bottleneck(w, "dialect:" + dia + ":" + app + ":adapter/", c)),
                     bottleneck(w, "common:" + app + ":adapter/", c));
  return head(w, "head:" + app, y);
}

inline double max_abs_diff(const Mat& a, const Tensor& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.values()[i]));
  return m;
}

}  // namespace wefofe::testing
