// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// FOFE-based feedforward LM architectures.
//
// All variants share a word embedding that is used both to build the FOFE
// code of the history and, transposed, as the output layer (tied). Variants:
//
//   MIXTURE    N parallel stacks of L layers; the N-th ends in a softmax over
//              N-1 weights that average the other stacks' features, followed
//              by one projection head.
//   MIXTURE_A  MIXTURE plus dialect adapters at a configurable placement.
//   AD         one stack + projection head + output bias per
//              (dialect, application); only the routed one runs.
//   AD_A       AD plus a dialect adapter before the selected head.
//   AD_DA      one stack + head per application, topped by a dual adapter
//              (dialect-specific branch + common branch).
//   AD_CAA_DA  shared stack -> per-application stack summed with a common
//              application adapter and the shared residual -> dual adapter ->
//              per-application head.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wefofe/container.hpp"
#include "wefofe/fofe.hpp"
#include "wefofe/optim.hpp"
#include "wefofe/tensor.hpp"

namespace wefofe {

enum class Variant { Mixture, MixtureA, AD, AD_A, AD_DA, AD_CAA_DA };

enum class Placement {
  BeforeProjection,
  LastHidden,
  Both,
  EveryHidden,
  EveryHiddenPlusProjection,
};

std::string to_string(Variant v);
std::string to_string(Placement p);
Variant parse_variant(std::string_view s);
Placement parse_placement(std::string_view s);

bool is_mixture(Variant v) noexcept;
bool has_adapters(Variant v) noexcept;
/// MIXTURE -> MIXTURE_A, AD -> AD_A; other variants map to themselves.
Variant adapter_variant(Variant v) noexcept;

struct ArchitectureConfig {
  Variant variant = Variant::Mixture;
  size_t d = 768;  // hidden / embedding width
  size_t N = 5;    // parallel blocks (mixture)
  size_t L = 4;    // layers per block or sub-network
  size_t k = 96;   // adapter bottleneck
  std::vector<std::string> dialects{"en_US", "en_GB", "en_IN"};
  std::vector<std::string> applications{"assistant", "stt"};
  size_t vocab_size = 0;
  /// Unset means "not configured"; adapter variants then use
  /// BEFORE_PROJECTION. Setting it on an adapter-free variant is an error.
  std::optional<Placement> placement;
  double alpha = kDefaultAlpha;

  Placement effective_placement() const;
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ArchitectureConfig from_json(const nlohmann::json& j);
};

struct RoutingKey {
  size_t dialect = 0;
  size_t application = 0;
  bool operator==(const RoutingKey&) const = default;
};

/// Resolves labels to a key; unknown labels are a Routing error.
RoutingKey make_key(const ArchitectureConfig& cfg, std::string_view dialect,
                    std::string_view application);
void check_key(const ArchitectureConfig& cfg, RoutingKey key);
std::vector<RoutingKey> all_keys(const ArchitectureConfig& cfg);

enum class GroupRole {
  Shared,
  SubNetwork,
  Head,
  DialectAdapter,
  CommonAdapter,
  ApplicationAdapter,
};
std::string to_string(GroupRole r);

struct GroupInfo {
  GroupRole role = GroupRole::Shared;
  std::optional<size_t> dialect;
  std::optional<size_t> application;

  bool active_for(RoutingKey key) const noexcept {
    return (!dialect || *dialect == key.dialect) &&
           (!application || *application == key.application);
  }
  bool is_adapter() const noexcept {
    return role == GroupRole::DialectAdapter || role == GroupRole::CommonAdapter ||
           role == GroupRole::ApplicationAdapter;
  }
};

struct Dense {
  Tensor weight;
  Tensor bias;
};

struct AdapterParams {
  Tensor down;    // d x k
  Tensor down_b;  // 1 x k
  Tensor up;      // k x d
  Tensor up_b;    // 1 x d
};

/// up(relu(down(x))) without the residual.
Tensor adapter_bottleneck(const Tensor& x, const AdapterParams& p);
/// x + up(relu(down(x))).
Tensor adapter_forward(const Tensor& x, const AdapterParams& p);

struct GroupCount {
  std::string name;
  GroupRole role;
  size_t parameters = 0;
  bool active = true;
};

struct ParamCount {
  std::vector<GroupCount> groups;
  size_t total = 0;
};

/// 2dk + k + d.
constexpr size_t adapter_parameter_count(size_t d, size_t k) noexcept {
  return 2 * d * k + k + d;
}

class Model {
 public:
  /// Deterministic: each tensor is drawn from a stream seeded by
  /// (seed, "<group>/<tensor>"), so groups shared between variants start
  /// identical under the same seed.
  static Model build(const ArchitectureConfig& cfg, uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// Deep copy; the clone shares no storage with this model.
  Model clone() const;

  /// Same non-adapter weights, adapter-bearing variant, fresh near-identity
  /// adapters. For RI-A. Adapter variants are returned as clones.
  Model with_adapters(std::optional<Placement> placement, uint64_t seed) const;

  const ArchitectureConfig& config() const noexcept { return cfg_; }
  std::vector<ParamGroup>& groups() noexcept { return groups_; }
  const std::vector<ParamGroup>& groups() const noexcept { return groups_; }
  const GroupInfo& info(size_t group) const { return infos_.at(group); }
  std::optional<size_t> find_group(std::string_view name) const;
  ParamGroup& group(std::string_view name);

  /// Re-draws the named group's tensors from their initializers.
  void reinitialize_group(std::string_view name, uint64_t seed);
  void set_all_trainable(bool on);

  const Tensor& embedding() const noexcept { return embedding_; }

  /// FOFE codes of histories through the shared embedding, B x d.
  Tensor encode(std::span<const std::vector<TokenId>> histories) const;
  /// Logits (B x V) from histories. Mixture without adapters ignores `key`;
  /// every other variant requires it.
  Tensor forward(std::span<const std::vector<TokenId>> histories,
                 std::optional<RoutingKey> key) const;
  Tensor forward_codes(const Tensor& codes, std::optional<RoutingKey> key) const;

  /// B x (N-1) normalized mixture weights. Mixture variants only.
  Tensor mixture_weights(const Tensor& codes, std::optional<RoutingKey> key) const;

  ParamCount count_params(std::optional<RoutingKey> active_key) const;
  size_t total_params() const { return count_params(std::nullopt).total; }
  size_t active_params(RoutingKey key) const { return count_params(key).total; }

  std::vector<NamedTensor> snapshot() const { return snapshot_groups(groups_); }
  /// Overwrites every tensor from `entries`; names and shapes must match
  /// exactly (Data error otherwise).
  void load_values(std::span<const NamedTensor> entries);

  nlohmann::ordered_json describe_groups() const;

 private:
  Model() = default;

  struct InitSpec {
    double stddev = 0.0;  // 0 => zeros
  };

  Tensor make_param(const std::string& group, const std::string& name, size_t rows,
                    size_t cols, double stddev);
  Dense make_dense(const std::string& group, const std::string& prefix, size_t in,
                   size_t out, double stddev);
  std::vector<Dense> make_stack(const std::string& group, const std::string& prefix);
  AdapterParams make_adapter(const std::string& group, const std::string& prefix);
  void begin_group(std::string name, GroupInfo info);

  Tensor stack_forward(const std::vector<Dense>& layers, Tensor x,
                       const std::vector<std::optional<AdapterParams>>* after_layer) const;
  Tensor head_forward(const Tensor& h, size_t head) const;
  Tensor dual_adapter(const Tensor& c, RoutingKey key) const;
  Tensor forward_mixture(const Tensor& codes, std::optional<RoutingKey> key) const;
  Tensor forward_ad(const Tensor& codes, RoutingKey key) const;
  Tensor forward_ad_caa_da(const Tensor& codes, RoutingKey key) const;
  size_t subnet_index(RoutingKey key) const;

  ArchitectureConfig cfg_;
  uint64_t seed_ = 0;
  std::vector<ParamGroup> groups_;
  std::vector<GroupInfo> infos_;
  std::map<std::string, InitSpec> init_;

  Tensor embedding_;

  // Mixture family.
  std::vector<std::vector<Dense>> blocks_;  // N-1 feature blocks
  std::vector<Dense> gate_block_;
  Dense gate_;
  // Per dialect: adapter after layer l of block b (b == N-1 is the gate
  // block), and before the projection.
  struct MixtureAdapters {
    std::vector<std::vector<std::optional<AdapterParams>>> after_layer;
    std::optional<AdapterParams> before_projection;
  };
  std::vector<MixtureAdapters> mixture_adapters_;

  // AD family.
  std::vector<Dense> shared_block_;
  std::vector<std::vector<Dense>> subnets_;
  std::vector<AdapterParams> dialect_adapters_;             // AD_A, per dialect
  std::vector<std::vector<AdapterParams>> dual_dialect_;    // [app][dialect]
  std::vector<AdapterParams> dual_common_;                  // [app]
  std::optional<AdapterParams> caa_;

  struct Head {
    Dense proj;
    Tensor output_bias;
  };
  std::vector<Head> heads_;  // 1 for mixture, one per sub-network otherwise
};

}  // namespace wefofe
