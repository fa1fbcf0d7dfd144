// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment commands over a RunConfig. Each is a pure function of the
// config bytes, the input files and the seed; only the `seconds` column of
// metrics.tsv and the latency numbers depend on the clock.
//
// Output layout under output_dir:
//   data/{train,dev,test}.tsv, data/ground_truth.tsv    generate
//   vocab.txt                                           build-vocab
//   train/{last,best}/, train/metrics.tsv, ...          train
//   adapt/<dialect>/..., adapt/final/                   adapt
//   reports/<label>.json, reports/<label>.latency.json  eval, bench
//   reports/comparison.tsv                              compare

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wefofe/eval.hpp"
#include "wefofe/run.hpp"

namespace wefofe {

using LogSink = std::function<void(const std::string&)>;

void cmd_generate(const RunConfig& run, const LogSink& log = {});
void cmd_build_vocab(const RunConfig& run, const LogSink& log = {});
void cmd_train(const RunConfig& run, bool resume, const LogSink& log = {});
/// All configured dialects in order, chaining each run's best model into the
/// next, or just `dialect` starting from the base.
void cmd_adapt(const RunConfig& run, const std::optional<std::string>& dialect, bool resume,
               const LogSink& log = {});

struct EvalTarget {
  std::string label;
  std::filesystem::path checkpoint;
};

/// The explicit target, or every [eval] checkpoint.
std::vector<EvalTarget> eval_targets(const RunConfig& run,
                                     const std::optional<std::filesystem::path>& checkpoint,
                                     const std::optional<std::string>& label);

EvalReport cmd_eval(const RunConfig& run, const EvalTarget& target,
                    const std::optional<std::filesystem::path>& testset, const LogSink& log = {});

/// Latency per routing key over the test-set histories; returns the JSON
/// written to reports/<label>.latency.json.
nlohmann::ordered_json cmd_bench(const RunConfig& run, const EvalTarget& target,
                                 std::optional<size_t> runs, const LogSink& log = {});

/// Architecture, parameter groups and per-key active counts as text.
std::string cmd_inspect(const std::filesystem::path& checkpoint);

/// Loads the reports (merging sibling <stem>.latency.json files) and returns
/// the comparison table; writes it to `out` when given.
std::string cmd_compare(const std::vector<std::filesystem::path>& reports,
                        const std::optional<std::filesystem::path>& out);

}  // namespace wefofe
