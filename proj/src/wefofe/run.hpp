// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: one INI document describes an experiment end to end.
//
//   seed = 7                        ; required
//   output_dir = out                ; relative to the config file
//
//   [corpus]     dialects, applications, vocab_size, train, dev, test
//   [generator]  grammar_size, divergence, sentences_per_dialect,
//                zipf_exponent, split
//   [model]      variant, d, N, L, k, alpha, placement
//   [train]      strategy, epochs, batch_size, optimizer, learning_rate,
//                beta1, beta2, epsilon, patience, proportions,
//                batches_per_epoch
//   [adapt]      strategy, dialects, placement and the [train] knobs
//   [eval]       checkpoints = label:dir ...
//   [bench]      runs, queries
//
// Lists are separated by spaces or commas. Unknown sections or keys are
// config errors, so a typo cannot silently fall back to a default.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wefofe/eval.hpp"
#include "wefofe/model.hpp"
#include "wefofe/synth.hpp"
#include "wefofe/train.hpp"

namespace wefofe {

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::filesystem::path output_dir;
  uint64_t seed = 0;

  GeneratorSpec generator;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  size_t vocab_size = 2000;  // including the reserved tokens
  std::optional<std::filesystem::path> train_file, dev_file, test_file;

  ArchitectureConfig arch;  // vocab_size is filled from the vocabulary
  TrainPlan train;
  TrainPlan adapt;
  std::vector<std::string> adapt_dialects;  // in run order
  std::vector<std::pair<std::string, std::filesystem::path>> eval_checkpoints;
  size_t bench_runs = kDefaultBenchRuns;
  size_t bench_queries = 200;

  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  std::filesystem::path data_dir() const { return output_dir / "data"; }
  std::filesystem::path train_path() const;
  std::filesystem::path dev_path() const;
  std::filesystem::path test_path() const;
  std::filesystem::path vocab_path() const { return output_dir / "vocab.txt"; }
  std::filesystem::path train_dir() const { return output_dir / "train"; }
  std::filesystem::path adapt_dir() const { return output_dir / "adapt"; }
  std::filesystem::path reports_dir() const { return output_dir / "reports"; }
  /// Relative to the output directory when not absolute.
  std::filesystem::path resolve_output(const std::filesystem::path& p) const;
};

}  // namespace wefofe
