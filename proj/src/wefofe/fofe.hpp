// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Fixed-size ordinally-forgetting encoding of token histories:
//
//   z_0 = 0,   z_t = alpha * z_{t-1} + e(w_t)
//
// Explicit mode uses one-hot e(w) (V-dimensional, tests and oracles only).
// Embedded mode uses e(w) = embedding row w; by linearity this equals the
// explicit code projected through the embedding, and is the production path.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wefofe/tensor.hpp"
#include "wefofe/vocab.hpp"

namespace wefofe {

inline constexpr double kDefaultAlpha = 0.7;

/// Throws a Config error unless 0 < alpha < 1.
void check_alpha(double alpha);

/// Incremental explicit-mode encoder.
class FofeState {
 public:
  FofeState(double alpha, size_t vocab_size);

  void push(TokenId id);
  /// Sentence boundary: back to the zero vector.
  void reset();

  double alpha() const noexcept { return alpha_; }
  size_t length() const noexcept { return length_; }
  const std::vector<double>& code() const noexcept { return code_; }

 private:
  double alpha_;
  std::vector<double> code_;
  size_t length_ = 0;
};

std::vector<double> fofe_encode(std::span<const TokenId> tokens, double alpha,
                                size_t vocab_size);

/// (id, alpha^(n-1-j)) for every position j of an n-token history.
SparseRow fofe_coefficients(std::span<const TokenId> tokens, double alpha);

/// 1 x d code of one history; differentiable w.r.t. `embedding`.
Tensor fofe_encode_embedded(std::span<const TokenId> tokens, double alpha,
                            const Tensor& embedding);

/// B x d codes, one row per history.
Tensor fofe_encode_batch(std::span<const std::vector<TokenId>> histories,
                         double alpha, const Tensor& embedding);

/// Searches every sequence of length <= max_len over the vocabulary and
/// returns the one whose explicit code matches `code` within 1e-9 (max abs).
/// Returns nullopt when nothing matches or when more than one sequence does.
std::optional<std::vector<TokenId>> fofe_decode_bruteforce(
    std::span<const double> code, double alpha, size_t vocab_size, size_t max_len);

}  // namespace wefofe
