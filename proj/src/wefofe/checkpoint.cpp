// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/checkpoint.hpp"

#include "wefofe/container.hpp"
#include "wefofe/error.hpp"

namespace wefofe {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& dir, const Model& model, const CheckpointMeta& meta) {
  nlohmann::ordered_json m;
  m["format"] = "wefofe-checkpoint";
  m["version"] = 1;
  m["architecture"] = model.config().to_json();
  m["vocab_fingerprint"] = meta.vocab_fingerprint;
  m["seed"] = meta.seed;
  m["strategy"] = meta.strategy;
  m["epoch"] = meta.epoch ? nlohmann::ordered_json(*meta.epoch) : nlohmann::ordered_json(nullptr);
  m["lineage"] = meta.lineage;
  m["parameters"] = model.total_params();
  m["groups"] = model.describe_groups();
  m["tensors"] = kTensorsFile;
  write_container(dir / kTensorsFile, model.snapshot());
  write_file_bytes(dir / kManifestFile, m.dump(2) + "\n");
}

bool checkpoint_exists(const fs::path& dir) {
  return fs::is_regular_file(dir / kManifestFile) && fs::is_regular_file(dir / kTensorsFile);
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  require(checkpoint_exists(dir), ErrorKind::Io,
          "no checkpoint at '" + dir.string() + "' (expected " + kManifestFile + " and " +
              kTensorsFile + ")");
  nlohmann::ordered_json m;
  try {
    m = nlohmann::ordered_json::parse(read_file_bytes(dir / kManifestFile));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, "malformed checkpoint manifest in '" + dir.string() + "': " + e.what());
  }
  try {
    require(m.at("format") == "wefofe-checkpoint", ErrorKind::Data,
            "'" + dir.string() + "' is not a wefofe checkpoint");
    CheckpointMeta meta;
    meta.strategy = m.at("strategy").get<std::string>();
    meta.seed = m.at("seed").get<uint64_t>();
    meta.vocab_fingerprint = m.at("vocab_fingerprint").get<std::string>();
    if (!m.at("epoch").is_null()) meta.epoch = m.at("epoch").get<size_t>();
    meta.lineage = m.at("lineage");
    const auto cfg = ArchitectureConfig::from_json(nlohmann::json::parse(m.at("architecture").dump()));
    Model model = Model::build(cfg, meta.seed);
    model.load_values(read_container(dir / kTensorsFile));
    for (const auto& g : m.at("groups")) {
      const auto name = g.at("name").get<std::string>();
      require(model.find_group(name).has_value(), ErrorKind::Data,
              "manifest lists unknown group '" + name + "'");
      model.group(name).set_trainable(g.at("trainable").get<bool>());
    }
    return {std::move(model), std::move(meta)};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, "malformed checkpoint manifest in '" + dir.string() + "': " + e.what());
  }
}

}  // namespace wefofe
