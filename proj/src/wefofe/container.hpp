// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Tensor container file:
//
//   bytes 0..3    magic "WFTC"
//   bytes 4..7    format version, uint32 little-endian (currently 1)
//   bytes 8..15   manifest length M, uint64 little-endian
//   next M bytes  manifest, UTF-8 JSON:
//                 {"tensors":[{"name":..,"rows":..,"cols":..,
//                              "dtype":"f64le","offset":..}, ...],
//                  "payload_bytes": ..}
//   remainder     payload; each tensor row-major little-endian float64 at
//                 its manifest offset (relative to payload start)

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wefofe/optim.hpp"
#include "wefofe/tensor.hpp"

namespace wefofe {

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

std::string encode_container(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_container(std::string_view bytes);

void write_container(const std::filesystem::path& path,
                     std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_container(const std::filesystem::path& path);

/// Snapshot of groups as "<group>/<tensor>" entries, in group order.
std::vector<NamedTensor> snapshot_groups(std::span<const ParamGroup> groups);

/// Container bytes for the subset of groups accepted by `keep`; used to
/// audit that frozen groups stay byte-identical.
template <typename Pred>
std::string encode_groups_if(std::span<const ParamGroup> groups, Pred keep) {
  std::vector<ParamGroup> kept;
  for (const auto& g : groups)
    if (keep(g)) kept.push_back(g);
  const auto snap = snapshot_groups(kept);
  return encode_container(snap);
}

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace wefofe
