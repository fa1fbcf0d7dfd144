// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Perplexity, latency statistics, evaluation reports and comparison tables.

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wefofe/dataset.hpp"
#include "wefofe/model.hpp"

namespace wefofe {

/// Sums per-token negative log-likelihoods (compensated), so partial sums
/// from shards merge to the same perplexity as one pass.
class NllAccumulator {
 public:
  void add(double nll, size_t tokens = 1);
  void merge(const NllAccumulator& other);
  double nll() const noexcept { return sum_ + comp_; }
  size_t tokens() const noexcept { return tokens_; }
  /// exp(nll / tokens); Data error when empty.
  double perplexity() const;

 private:
  double sum_ = 0.0, comp_ = 0.0;
  size_t tokens_ = 0;
};

/// Per routing-key accumulators (index as key_index).
std::vector<NllAccumulator> score_dataset(const Model& model, const Dataset& data,
                                          size_t batch_size = 256);

/// Perplexity of the sentences routed by `key`; Data error if there are none.
double perplexity(const Model& model, const Dataset& data, RoutingKey key);

struct DialectPerplexity {
  std::vector<std::optional<double>> by_dialect;  // applications pooled; unset without data
  double mean = 0.0;  // unweighted mean over dialects with data
};
/// Data error when no dialect has data.
DialectPerplexity dialect_perplexity(const Model& model, const Dataset& data);

/// Add-one smoothed unigram over the full vocabulary, framed like the
/// network (boundary tokens at the end of every sentence are predicted).
class UnigramModel {
 public:
  UnigramModel(const Dataset& train, size_t vocab_size);
  double log_prob(TokenId w) const { return log_probs_.at(w); }
  double perplexity(const Dataset& data, std::optional<size_t> dialect = std::nullopt) const;

 private:
  std::vector<double> log_probs_;
};

// --- latency ---------------------------------------------------------------

/// sorted[ceil(q * n) - 1]; Data error on an empty sample.
double percentile_nearest_rank(std::vector<double> values, double q);

/// |b - a| / a < 0.10.
bool equally_fast(double a, double b);

inline constexpr size_t kDefaultBenchRuns = 3;

struct RunLatency {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

struct LatencyStats {
  std::vector<RunLatency> runs;
  double mean_ms = 0.0;  // average of per-run means
  double p95_ms = 0.0;   // average of per-run P95s
  size_t queries = 0;

  nlohmann::ordered_json to_json() const;
  static LatencyStats from_json(const nlohmann::ordered_json& j);
};

/// Times `query(i)` for every i < queries, `runs` times.
LatencyStats bench_latency(const std::function<void(size_t)>& query, size_t queries,
                           size_t runs = kDefaultBenchRuns);
LatencyStats summarize_latency(const std::vector<std::vector<double>>& per_run_ms);

/// Per-query forward pass (batch of one) of the given histories.
LatencyStats bench_model(const Model& model, RoutingKey key,
                         const std::vector<std::vector<TokenId>>& histories,
                         size_t runs = kDefaultBenchRuns);

// --- reports ---------------------------------------------------------------

struct PerplexityEntry {
  std::string dialect;
  std::string application;
  size_t tokens = 0;
  double perplexity = 0.0;
};

struct LatencyEntry {
  std::string dialect;
  std::string application;
  LatencyStats stats;
};

struct EvalReport {
  std::string label;
  std::string variant;
  std::string config_fingerprint;
  std::string vocab_fingerprint;
  std::vector<PerplexityEntry> perplexity;
  std::vector<std::pair<std::string, double>> dialect_perplexity;
  size_t total_params = 0;
  std::vector<std::pair<std::string, size_t>> active_params;  // "dialect/app" -> count
  std::vector<LatencyEntry> latency;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::ordered_json& j);
  std::string dump() const;  // to_json, 2-space indent, trailing newline
};

std::string config_fingerprint(const ArchitectureConfig& cfg);

EvalReport evaluate(const Model& model, const Dataset& data, const std::string& label,
                    const std::string& vocab_fingerprint);

/// Tab-separated table, one row per report; the best (lowest) value of each
/// numeric column carries a trailing '*'. Comparison error when the reports
/// were built on different vocabularies.
std::string compare(const std::vector<EvalReport>& reports);

}  // namespace wefofe
