// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/fofe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wefofe/error.hpp"

namespace wefofe {

void check_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::Config,
          "forgetting factor alpha must lie strictly inside (0,1), got " +
              std::to_string(alpha));
}

namespace {

void check_ids(std::span<const TokenId> tokens, size_t vocab_size) {
  for (TokenId id : tokens)
    require(id < vocab_size, ErrorKind::Index,
            "token id " + std::to_string(id) + " out of range for vocabulary size " +
                std::to_string(vocab_size));
}

}  // namespace

FofeState::FofeState(double alpha, size_t vocab_size)
    : alpha_(alpha), code_(vocab_size, 0.0) {
  check_alpha(alpha);
}

void FofeState::push(TokenId id) {
  check_ids({&id, 1}, code_.size());
  for (double& z : code_) z *= alpha_;
  code_[id] += 1.0;
  ++length_;
}

void FofeState::reset() {
  std::fill(code_.begin(), code_.end(), 0.0);
  length_ = 0;
}

std::vector<double> fofe_encode(std::span<const TokenId> tokens, double alpha,
                                size_t vocab_size) {
  FofeState state(alpha, vocab_size);
  for (TokenId id : tokens) state.push(id);
  return state.code();
}

SparseRow fofe_coefficients(std::span<const TokenId> tokens, double alpha) {
  SparseRow row(tokens.size());
  double coef = 1.0;
  for (size_t j = tokens.size(); j-- > 0;) {
    row[j] = {tokens[j], coef};
    coef *= alpha;
  }
  return row;
}

Tensor fofe_encode_embedded(std::span<const TokenId> tokens, double alpha,
                            const Tensor& embedding) {
  const std::vector<TokenId> one(tokens.begin(), tokens.end());
  return fofe_encode_batch({&one, 1}, alpha, embedding);
}

Tensor fofe_encode_batch(std::span<const std::vector<TokenId>> histories,
                         double alpha, const Tensor& embedding) {
  check_alpha(alpha);
  std::vector<SparseRow> rows;
  rows.reserve(histories.size());
  for (const auto& h : histories) {
    check_ids(h, embedding.rows());
    rows.push_back(fofe_coefficients(h, alpha));
  }
  return weighted_gather(embedding, rows);
}

std::optional<std::vector<TokenId>> fofe_decode_bruteforce(
    std::span<const double> code, double alpha, size_t vocab_size, size_t max_len) {
  check_alpha(alpha);
  if (code.size() != vocab_size) return std::nullopt;
  // Codes reachable by the recursion from one-hot inputs are non-negative.
  if (std::any_of(code.begin(), code.end(), [](double z) { return z < 0.0; }))
    return std::nullopt;

  constexpr double kTol = 1e-9;
  std::optional<std::vector<TokenId>> found;
  size_t matches = 0;
  std::vector<TokenId> seq;
  for (size_t len = 0; len <= max_len && matches < 2; ++len) {
    seq.assign(len, 0);
    while (true) {
      const auto z = fofe_encode(seq, alpha, vocab_size);
      bool same = true;
      for (size_t i = 0; i < vocab_size && same; ++i)
        same = std::abs(z[i] - code[i]) <= kTol;
      if (same) {
        if (++matches == 1) found = seq;
        else break;
      }
      // Odometer increment; done when it wraps.
      size_t pos = len;
      while (pos > 0 && ++seq[pos - 1] == vocab_size) seq[--pos] = 0;
      if (pos == 0) break;
    }
  }
  if (matches != 1) return std::nullopt;
  return found;
}

}  // namespace wefofe
