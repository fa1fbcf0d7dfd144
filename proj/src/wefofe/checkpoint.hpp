// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// A checkpoint directory holds model.tensors (tensor container) and
// manifest.json: architecture, vocabulary fingerprint, group classification,
// seed and lineage, so a checkpoint routes and freezes without side files.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wefofe/model.hpp"

namespace wefofe {

struct CheckpointMeta {
  std::string strategy = "BASE";
  uint64_t seed = 0;
  std::string vocab_fingerprint;
  std::optional<size_t> epoch;
  /// Earlier stages, oldest first: [{"strategy":..., "dialect":..., ...}].
  nlohmann::ordered_json lineage = nlohmann::ordered_json::array();
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTensorsFile = "model.tensors";

void save_checkpoint(const std::filesystem::path& dir, const Model& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

/// Io error when the directory lacks either file, Data error when they are
/// malformed or disagree.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);
bool checkpoint_exists(const std::filesystem::path& dir);

}  // namespace wefofe
