// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-dialect batch scheduling and the training strategies:
//
//   BASE  every group trainable, data from all dialects.
//   PT_A  like BASE on an adapter-bearing model (adapters present from the
//         first step). Each batch reaches only its own dialect's adapters.
//   RI_A  start from a trained base, add (or re-draw) one dialect's
//         adapters, freeze everything else, train on that dialect only.
//   FT_A  start from a PT_A model, train that dialect's adapters only.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wefofe/checkpoint.hpp"
#include "wefofe/dataset.hpp"
#include "wefofe/model.hpp"
#include "wefofe/optim.hpp"

namespace wefofe {

enum class Strategy { Base, RI_A, PT_A, FT_A };
std::string to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct TrainPlan {
  Strategy strategy = Strategy::Base;
  size_t epochs = 10;
  size_t batch_size = 64;  // prediction events per batch
  OptimizerConfig optimizer;
  uint64_t seed = 1;
  size_t patience = 3;
  /// Per-dialect sampling weights; empty means equal over dialects with data.
  std::vector<double> proportions;
  /// Default: ceil(events / batch_size) over the training data used.
  std::optional<size_t> batches_per_epoch;
  /// Target dialect of RI_A / FT_A.
  std::optional<std::string> dialect;
  /// Adapter placement when RI_A converts an adapter-free base.
  std::optional<Placement> placement;

  void validate() const;
};

struct Batch {
  RoutingKey key;
  std::vector<EventRef> events;
};

/// Deterministic interleaving of homogeneous (dialect, application) batches.
/// Dialect quotas follow the proportions (largest remainder) and are spread
/// evenly over the epoch; within a dialect, applications get batches in
/// proportion to their event counts. Every batch holds exactly batch_size
/// events: a stream that runs out is reshuffled and wraps around. Epoch e
/// depends only on (seed, e).
class BatchSchedule {
 public:
  BatchSchedule(std::vector<std::vector<EventRef>> buckets, size_t dialects, size_t applications,
                std::vector<double> proportions, uint64_t seed, size_t batch_size,
                std::optional<size_t> batches_per_epoch);

  size_t batches_per_epoch() const noexcept { return batches_; }
  const std::vector<size_t>& dialect_quota() const noexcept { return quota_; }
  std::vector<Batch> epoch(size_t e) const;

 private:
  std::vector<std::vector<EventRef>> buckets_;
  size_t dialects_, applications_;
  uint64_t seed_;
  size_t batch_size_, batches_ = 0;
  std::vector<size_t> quota_;
  std::vector<size_t> dialect_order_;
  std::vector<std::vector<size_t>> app_order_;  // per dialect
};

BatchSchedule make_schedule(const Dataset& data, const ArchitectureConfig& cfg,
                            const std::vector<double>& proportions, uint64_t seed,
                            size_t batch_size, std::optional<size_t> batches_per_epoch = {});

/// Splits n into parts proportional to weights (largest remainder, ties to
/// the lower index).
std::vector<size_t> apportion(size_t n, const std::vector<double>& weights);

struct EpochMetrics {
  size_t epoch = 0;
  Strategy strategy = Strategy::Base;
  double train_loss = 0.0;  // mean batch loss
  std::vector<std::optional<double>> dev_perplexity;  // per dialect, unset without dev data
  double dev_score = 0.0;   // the early-stopping criterion
  double seconds = 0.0;
};

/// "epoch\tstrategy\ttrain_loss\tdev_ppl:<d>...\tdev_score\tseconds" lines.
std::string format_metrics(const ArchitectureConfig& cfg, const std::vector<EpochMetrics>& rows);

struct TrainOptions {
  /// Holds last/, best/, train_state.json, optimizer.tensors and
  /// metrics.tsv, rewritten at every epoch boundary.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Continue from checkpoint_dir if it holds a train state.
  bool resume = false;
  /// Return after this many epochs have been completed in total, as if the
  /// process had been interrupted (for resume tests).
  std::optional<size_t> stop_after_epoch;
  std::string vocab_fingerprint;
  nlohmann::ordered_json lineage = nlohmann::ordered_json::array();
  std::function<void(const Model&, const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  Model model;  // best epoch by dev score
  std::vector<EpochMetrics> history;
  std::vector<double> batch_losses;  // this process only
  size_t best_epoch = 0;
  double best_score = 0.0;
  bool stopped_early = false;
  bool finished = false;  // false when interrupted by stop_after_epoch
};

TrainResult train_base(Model model, const Dataset& train, const Dataset& dev,
                       const TrainPlan& plan, const TrainOptions& options = {});

/// Copies the base, adds fresh near-identity adapters for `plan.dialect`
/// (converting MIXTURE -> MIXTURE_A, AD -> AD_A when needed), freezes every
/// other group and trains on that dialect's data.
TrainResult train_adapter_ri(const Model& base, const Dataset& train, const Dataset& dev,
                             const TrainPlan& plan, const TrainOptions& options = {});

/// Like RI_A, but the adapters keep their pretrained values.
TrainResult finetune_adapter(const Model& pretrained, const Dataset& train, const Dataset& dev,
                             const TrainPlan& plan, const TrainOptions& options = {});

/// Names of the adapter groups that belong to `dialect`.
std::vector<std::string> dialect_adapter_groups(const Model& model, size_t dialect);

/// Prepares the model RI_A / FT_A start from: adapters present, every group
/// frozen except the dialect's adapters.
Model prepare_adapter_model(const Model& source, const TrainPlan& plan);

}  // namespace wefofe
