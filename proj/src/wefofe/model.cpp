// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "wefofe/error.hpp"
#include "wefofe/rng.hpp"

namespace wefofe {

namespace {

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::Mixture, "MIXTURE"}, {Variant::MixtureA, "MIXTURE_A"},
    {Variant::AD, "AD"},           {Variant::AD_A, "AD_A"},
    {Variant::AD_DA, "AD_DA"},     {Variant::AD_CAA_DA, "AD_CAA_DA"},
};

constexpr std::pair<Placement, std::string_view> kPlacementNames[] = {
    {Placement::BeforeProjection, "BEFORE_PROJECTION"},
    {Placement::LastHidden, "LAST_HIDDEN"},
    {Placement::Both, "BOTH"},
    {Placement::EveryHidden, "EVERY_HIDDEN"},
    {Placement::EveryHiddenPlusProjection, "EVERY_HIDDEN_PLUS_PROJECTION"},
};

constexpr double kAdapterInitStd = 0.02;

bool adapter_before_projection(Placement p) {
  return p == Placement::BeforeProjection || p == Placement::Both ||
         p == Placement::EveryHiddenPlusProjection;
}

// Whether layer `layer` of an L-layer block carries an adapter.
bool adapter_after_layer(Placement p, size_t layer, size_t L) {
  switch (p) {
    case Placement::LastHidden:
    case Placement::Both:
      return layer + 1 == L;
    case Placement::EveryHidden:
    case Placement::EveryHiddenPlusProjection:
      return true;
    case Placement::BeforeProjection:
      return false;
  }
  return false;
}

size_t index_of(const std::vector<std::string>& v, std::string_view s) {
  const auto it = std::find(v.begin(), v.end(), s);
  return it == v.end() ? v.size() : static_cast<size_t>(it - v.begin());
}

}  // namespace

std::string to_string(Variant v) {
  for (const auto& [e, n] : kVariantNames)
    if (e == v) return std::string(n);
  return "?";
}

std::string to_string(Placement p) {
  for (const auto& [e, n] : kPlacementNames)
    if (e == p) return std::string(n);
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (const auto& [e, n] : kVariantNames)
    if (n == s) return e;
  fail(ErrorKind::Config, "unknown variant '" + std::string(s) + "'");
}

Placement parse_placement(std::string_view s) {
  for (const auto& [e, n] : kPlacementNames)
    if (n == s) return e;
  fail(ErrorKind::Config, "unknown adapter placement '" + std::string(s) + "'");
}

std::string to_string(GroupRole r) {
  switch (r) {
    case GroupRole::Shared: return "shared";
    case GroupRole::SubNetwork: return "subnetwork";
    case GroupRole::Head: return "head";
    case GroupRole::DialectAdapter: return "dialect_adapter";
    case GroupRole::CommonAdapter: return "common_adapter";
    case GroupRole::ApplicationAdapter: return "application_adapter";
  }
  return "?";
}

bool is_mixture(Variant v) noexcept {
  return v == Variant::Mixture || v == Variant::MixtureA;
}

bool has_adapters(Variant v) noexcept {
  return v != Variant::Mixture && v != Variant::AD;
}

Variant adapter_variant(Variant v) noexcept {
  if (v == Variant::Mixture) return Variant::MixtureA;
  if (v == Variant::AD) return Variant::AD_A;
  return v;
}

// --- config -----------------------------------------------------------------

Placement ArchitectureConfig::effective_placement() const {
  return placement.value_or(Placement::BeforeProjection);
}

void ArchitectureConfig::validate() const {
  require(vocab_size >= 2, ErrorKind::Config,
          "model.vocab_size must cover the reserved tokens (>= 2)");
  require(d >= 1, ErrorKind::Config, "model.d must be >= 1");
  require(L >= 1, ErrorKind::Config, "model.L must be >= 1");
  if (is_mixture(variant))
    require(N >= 2, ErrorKind::Config, "model.N must be >= 2 for mixture variants");
  require(!dialects.empty(), ErrorKind::Config, "model.dialects must not be empty");
  require(!applications.empty(), ErrorKind::Config,
          "model.applications must not be empty");
  require(std::set<std::string>(dialects.begin(), dialects.end()).size() == dialects.size(),
          ErrorKind::Config, "model.dialects contains duplicates");
  require(std::set<std::string>(applications.begin(), applications.end()).size() ==
              applications.size(),
          ErrorKind::Config, "model.applications contains duplicates");
  check_alpha(alpha);
  if (!has_adapters(variant)) {
    require(!placement.has_value(), ErrorKind::Config,
            "model.placement is set but variant " + to_string(variant) +
                " has no adapters");
    return;
  }
  require(k > 0 && k < d, ErrorKind::Config, "model.k must satisfy 0 < k < d");
  if (!is_mixture(variant))
    require(effective_placement() == Placement::BeforeProjection, ErrorKind::Config,
            "variant " + to_string(variant) +
                " only supports adapter placement BEFORE_PROJECTION");
}

nlohmann::ordered_json ArchitectureConfig::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = to_string(variant);
  j["d"] = d;
  j["N"] = N;
  j["L"] = L;
  j["k"] = k;
  j["dialects"] = dialects;
  j["applications"] = applications;
  j["vocab_size"] = vocab_size;
  j["placement"] = placement ? nlohmann::ordered_json(to_string(*placement))
                             : nlohmann::ordered_json(nullptr);
  j["alpha"] = alpha;
  return j;
}

ArchitectureConfig ArchitectureConfig::from_json(const nlohmann::json& j) {
  ArchitectureConfig c;
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.d = j.at("d").get<size_t>();
    c.N = j.at("N").get<size_t>();
    c.L = j.at("L").get<size_t>();
    c.k = j.at("k").get<size_t>();
    c.dialects = j.at("dialects").get<std::vector<std::string>>();
    c.applications = j.at("applications").get<std::vector<std::string>>();
    c.vocab_size = j.at("vocab_size").get<size_t>();
    if (!j.at("placement").is_null())
      c.placement = parse_placement(j.at("placement").get<std::string>());
    c.alpha = j.at("alpha").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed architecture config: ") + e.what());
  }
  return c;
}

RoutingKey make_key(const ArchitectureConfig& cfg, std::string_view dialect,
                    std::string_view application) {
  const size_t d = index_of(cfg.dialects, dialect);
  require(d < cfg.dialects.size(), ErrorKind::Routing,
          "unknown dialect '" + std::string(dialect) + "'");
  const size_t a = index_of(cfg.applications, application);
  require(a < cfg.applications.size(), ErrorKind::Routing,
          "unknown application '" + std::string(application) + "'");
  return {d, a};
}

void check_key(const ArchitectureConfig& cfg, RoutingKey key) {
  require(key.dialect < cfg.dialects.size() && key.application < cfg.applications.size(),
          ErrorKind::Routing,
          "routing key (" + std::to_string(key.dialect) + "," +
              std::to_string(key.application) + ") is outside the configured sets");
}

std::vector<RoutingKey> all_keys(const ArchitectureConfig& cfg) {
  std::vector<RoutingKey> out;
  for (size_t d = 0; d < cfg.dialects.size(); ++d)
    for (size_t a = 0; a < cfg.applications.size(); ++a) out.push_back({d, a});
  return out;
}

// --- adapters ---------------------------------------------------------------

Tensor adapter_bottleneck(const Tensor& x, const AdapterParams& p) {
  require(x.cols() == p.down.rows(), ErrorKind::Dimension,
          "adapter input width " + std::to_string(x.cols()) + " != " +
              std::to_string(p.down.rows()));
  return affine(relu(affine(x, p.down, p.down_b)), p.up, p.up_b);
}

Tensor adapter_forward(const Tensor& x, const AdapterParams& p) {
  return add(x, adapter_bottleneck(x, p));
}

// --- building ---------------------------------------------------------------

void Model::begin_group(std::string name, GroupInfo info) {
  ParamGroup g;
  g.name = std::move(name);
  groups_.push_back(std::move(g));
  infos_.push_back(info);
}

Tensor Model::make_param(const std::string& group, const std::string& name, size_t rows,
                         size_t cols, double stddev) {
  const std::string key = group + "/" + name;
  init_[key] = {stddev};
  std::vector<double> v(rows * cols, 0.0);
  if (stddev > 0.0) {
    Rng rng(derive_seed(seed_, key));
    for (double& x : v) x = stddev * rng.normal();
  }
  Tensor t = Tensor::from(rows, cols, std::move(v), true);
  groups_.back().tensor_names.push_back(name);
  groups_.back().tensors.push_back(t);
  return t;
}

Dense Model::make_dense(const std::string& group, const std::string& prefix, size_t in,
                        size_t out, double stddev) {
  return {make_param(group, prefix + ".weight", in, out, stddev),
          make_param(group, prefix + ".bias", 1, out, 0.0)};
}

std::vector<Dense> Model::make_stack(const std::string& group, const std::string& prefix) {
  std::vector<Dense> layers;
  const double he = std::sqrt(2.0 / static_cast<double>(cfg_.d));
  for (size_t l = 0; l < cfg_.L; ++l)
    layers.push_back(make_dense(group, prefix + "layer" + std::to_string(l), cfg_.d,
                                cfg_.d, he));
  return layers;
}

AdapterParams Model::make_adapter(const std::string& group, const std::string& prefix) {
  AdapterParams p;
  p.down = make_param(group, prefix + "down.weight", cfg_.d, cfg_.k, kAdapterInitStd);
  p.down_b = make_param(group, prefix + "down.bias", 1, cfg_.k, 0.0);
  p.up = make_param(group, prefix + "up.weight", cfg_.k, cfg_.d, 0.0);
  p.up_b = make_param(group, prefix + "up.bias", 1, cfg_.d, 0.0);
  return p;
}

Model Model::build(const ArchitectureConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  m.seed_ = seed;
  const size_t D = cfg.dialects.size(), A = cfg.applications.size();
  const double lin = 1.0 / std::sqrt(static_cast<double>(cfg.d));
  const Placement placement = cfg.effective_placement();

  auto make_head = [&](const std::string& group) {
    Head h;
    h.proj = m.make_dense(group, "proj", cfg.d, cfg.d, lin);
    h.output_bias = m.make_param(group, "output_bias", 1, cfg.vocab_size, 0.0);
    m.heads_.push_back(std::move(h));
  };

  m.begin_group("embedding", {GroupRole::Shared, {}, {}});
  m.embedding_ = m.make_param("embedding", "weight", cfg.vocab_size, cfg.d, lin);

  if (is_mixture(cfg.variant)) {
    for (size_t b = 0; b + 1 < cfg.N; ++b) {
      const std::string g = "block:" + std::to_string(b);
      m.begin_group(g, {GroupRole::Shared, {}, {}});
      m.blocks_.push_back(m.make_stack(g, ""));
    }
    m.begin_group("mixture", {GroupRole::Shared, {}, {}});
    m.gate_block_ = m.make_stack("mixture", "");
    m.gate_ = m.make_dense("mixture", "gate", cfg.d, cfg.N - 1, lin);
    m.begin_group("projection", {GroupRole::Shared, {}, {}});
    make_head("projection");

    if (cfg.variant == Variant::MixtureA) {
      for (size_t d = 0; d < D; ++d) {
        const std::string g = "dialect:" + cfg.dialects[d] + ":adapter";
        m.begin_group(g, {GroupRole::DialectAdapter, d, {}});
        MixtureAdapters ma;
        ma.after_layer.resize(cfg.N);
        for (size_t b = 0; b < cfg.N; ++b) {
          ma.after_layer[b].resize(cfg.L);
          for (size_t l = 0; l < cfg.L; ++l)
            if (adapter_after_layer(placement, l, cfg.L))
              ma.after_layer[b][l] = m.make_adapter(
                  g, "block" + std::to_string(b) + ".layer" + std::to_string(l) + ".");
        }
        if (adapter_before_projection(placement))
          ma.before_projection = m.make_adapter(g, "before_projection.");
        m.mixture_adapters_.push_back(std::move(ma));
      }
    }
    return m;
  }

  if (cfg.variant == Variant::AD || cfg.variant == Variant::AD_A) {
    for (size_t d = 0; d < D; ++d)
      for (size_t a = 0; a < A; ++a) {
        const std::string suffix = cfg.dialects[d] + ":" + cfg.applications[a];
        m.begin_group("subnet:" + suffix, {GroupRole::SubNetwork, d, a});
        m.subnets_.push_back(m.make_stack("subnet:" + suffix, ""));
        m.begin_group("head:" + suffix, {GroupRole::Head, d, a});
        make_head("head:" + suffix);
      }
    if (cfg.variant == Variant::AD_A)
      for (size_t d = 0; d < D; ++d) {
        const std::string g = "dialect:" + cfg.dialects[d] + ":adapter";
        m.begin_group(g, {GroupRole::DialectAdapter, d, {}});
        m.dialect_adapters_.push_back(m.make_adapter(g, ""));
      }
    return m;
  }

  // AD_DA and AD_CAA_DA.
  if (cfg.variant == Variant::AD_CAA_DA) {
    m.begin_group("shared_block", {GroupRole::Shared, {}, {}});
    m.shared_block_ = m.make_stack("shared_block", "");
  }
  for (size_t a = 0; a < A; ++a) {
    const std::string& app = cfg.applications[a];
    m.begin_group("subnet:" + app, {GroupRole::SubNetwork, {}, a});
    m.subnets_.push_back(m.make_stack("subnet:" + app, ""));
    m.begin_group("head:" + app, {GroupRole::Head, {}, a});
    make_head("head:" + app);
  }
  if (cfg.variant == Variant::AD_CAA_DA) {
    m.begin_group("caa:adapter", {GroupRole::ApplicationAdapter, {}, {}});
    m.caa_ = m.make_adapter("caa:adapter", "");
  }
  m.dual_dialect_.resize(A);
  for (size_t a = 0; a < A; ++a) {
    for (size_t d = 0; d < D; ++d) {
      const std::string g = "dialect:" + cfg.dialects[d] + ":" + cfg.applications[a] + ":adapter";
      m.begin_group(g, {GroupRole::DialectAdapter, d, a});
      m.dual_dialect_[a].push_back(m.make_adapter(g, ""));
    }
    const std::string g = "common:" + cfg.applications[a] + ":adapter";
    m.begin_group(g, {GroupRole::CommonAdapter, {}, a});
    m.dual_common_.push_back(m.make_adapter(g, ""));
  }
  return m;
}

Model Model::clone() const {
  Model m = build(cfg_, seed_);
  m.load_values(snapshot());
  for (size_t i = 0; i < groups_.size(); ++i) m.groups_[i].set_trainable(groups_[i].trainable);
  return m;
}

Model Model::with_adapters(std::optional<Placement> placement, uint64_t seed) const {
  if (has_adapters(cfg_.variant)) return clone();
  ArchitectureConfig cfg = cfg_;
  cfg.variant = adapter_variant(cfg_.variant);
  cfg.placement = placement;
  Model m = build(cfg, seed);
  std::unordered_map<std::string, const NamedTensor*> by_name;
  const auto snap = snapshot();
  for (const auto& e : snap) by_name[e.name] = &e;
  for (auto& g : m.groups_)
    for (size_t i = 0; i < g.tensors.size(); ++i) {
      const auto it = by_name.find(g.name + "/" + g.tensor_names[i]);
      if (it == by_name.end()) continue;
      auto dst = g.tensors[i].mutable_values();
      std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
    }
  return m;
}

std::optional<size_t> Model::find_group(std::string_view name) const {
  for (size_t i = 0; i < groups_.size(); ++i)
    if (groups_[i].name == name) return i;
  return std::nullopt;
}

ParamGroup& Model::group(std::string_view name) {
  const auto i = find_group(name);
  require(i.has_value(), ErrorKind::Config, "no parameter group '" + std::string(name) + "'");
  return groups_[*i];
}

void Model::reinitialize_group(std::string_view name, uint64_t seed) {
  ParamGroup& g = group(name);
  for (size_t i = 0; i < g.tensors.size(); ++i) {
    const std::string key = g.name + "/" + g.tensor_names[i];
    const double stddev = init_.at(key).stddev;
    auto v = g.tensors[i].mutable_values();
    if (stddev > 0.0) {
      Rng rng(derive_seed(seed, key));
      for (double& x : v) x = stddev * rng.normal();
    } else {
      std::fill(v.begin(), v.end(), 0.0);
    }
  }
}

void Model::set_all_trainable(bool on) {
  for (auto& g : groups_) g.set_trainable(on);
}

void Model::load_values(std::span<const NamedTensor> entries) {
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& e : entries) {
    const bool fresh = by_name.emplace(e.name, &e).second;
    require(fresh, ErrorKind::Data, "duplicate checkpoint tensor '" + e.name + "'");
  }
  size_t used = 0;
  for (auto& g : groups_)
    for (size_t i = 0; i < g.tensors.size(); ++i) {
      const std::string key = g.name + "/" + g.tensor_names[i];
      const auto it = by_name.find(key);
      require(it != by_name.end(), ErrorKind::Data, "checkpoint lacks tensor '" + key + "'");
      require(it->second->shape == g.tensors[i].shape(), ErrorKind::Data,
              "checkpoint tensor '" + key + "' has the wrong shape");
      auto dst = g.tensors[i].mutable_values();
      std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
      ++used;
    }
  require(used == entries.size(), ErrorKind::Data,
          "checkpoint holds tensors the architecture does not define");
}

// --- forward ----------------------------------------------------------------

Tensor Model::encode(std::span<const std::vector<TokenId>> histories) const {
  return fofe_encode_batch(histories, cfg_.alpha, embedding_);
}

Tensor Model::forward(std::span<const std::vector<TokenId>> histories,
                      std::optional<RoutingKey> key) const {
  return forward_codes(encode(histories), key);
}

Tensor Model::forward_codes(const Tensor& codes, std::optional<RoutingKey> key) const {
  require(codes.cols() == cfg_.d, ErrorKind::Dimension,
          "FOFE code width " + std::to_string(codes.cols()) + " != d " +
              std::to_string(cfg_.d));
  if (is_mixture(cfg_.variant)) return forward_mixture(codes, key);
  require(key.has_value(), ErrorKind::Routing,
          "variant " + to_string(cfg_.variant) + " requires a routing key");
  check_key(cfg_, *key);
  if (cfg_.variant == Variant::AD_CAA_DA) return forward_ad_caa_da(codes, *key);
  return forward_ad(codes, *key);
}

Tensor Model::stack_forward(const std::vector<Dense>& layers, Tensor x,
                            const std::vector<std::optional<AdapterParams>>* after_layer) const {
  for (size_t l = 0; l < layers.size(); ++l) {
    x = relu(affine(x, layers[l].weight, layers[l].bias));
    if (after_layer && (*after_layer)[l]) x = adapter_forward(x, *(*after_layer)[l]);
  }
  return x;
}

Tensor Model::head_forward(const Tensor& h, size_t head) const {
  const Head& hd = heads_[head];
  return affine_nt(affine(h, hd.proj.weight, hd.proj.bias), embedding_, hd.output_bias);
}

Tensor Model::mixture_weights(const Tensor& codes, std::optional<RoutingKey> key) const {
  require(is_mixture(cfg_.variant), ErrorKind::Config,
          "mixture weights requested from variant " + to_string(cfg_.variant));
  const MixtureAdapters* ma = nullptr;
  if (cfg_.variant == Variant::MixtureA) {
    require(key.has_value(), ErrorKind::Routing,
            "MIXTURE_A needs a routing key to select the dialect adapter");
    check_key(cfg_, *key);
    ma = &mixture_adapters_[key->dialect];
  }
  const Tensor g = stack_forward(gate_block_, codes, ma ? &ma->after_layer[cfg_.N - 1] : nullptr);
  return softmax_rows(affine(g, gate_.weight, gate_.bias));
}

Tensor Model::forward_mixture(const Tensor& codes, std::optional<RoutingKey> key) const {
  const MixtureAdapters* ma = nullptr;
  if (cfg_.variant == Variant::MixtureA) {
    require(key.has_value(), ErrorKind::Routing,
            "MIXTURE_A needs a routing key to select the dialect adapter");
    check_key(cfg_, *key);
    ma = &mixture_adapters_[key->dialect];
  }
  std::vector<Tensor> features;
  features.reserve(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b)
    features.push_back(stack_forward(blocks_[b], codes, ma ? &ma->after_layer[b] : nullptr));
  Tensor h = mix(mixture_weights(codes, key), features);
  if (ma && ma->before_projection) h = adapter_forward(h, *ma->before_projection);
  return head_forward(h, 0);
}

size_t Model::subnet_index(RoutingKey key) const {
  if (cfg_.variant == Variant::AD || cfg_.variant == Variant::AD_A)
    return key.dialect * cfg_.applications.size() + key.application;
  return key.application;
}

Tensor Model::dual_adapter(const Tensor& c, RoutingKey key) const {
  const Tensor dialect = adapter_bottleneck(c, dual_dialect_[key.application][key.dialect]);
  const Tensor common = adapter_bottleneck(c, dual_common_[key.application]);
  return add(add(c, dialect), common);
}

Tensor Model::forward_ad(const Tensor& codes, RoutingKey key) const {
  const size_t s = subnet_index(key);
  Tensor h = stack_forward(subnets_[s], codes, nullptr);
  if (cfg_.variant == Variant::AD_A) h = adapter_forward(h, dialect_adapters_[key.dialect]);
  if (cfg_.variant == Variant::AD_DA) h = dual_adapter(h, key);
  return head_forward(h, s);
}

Tensor Model::forward_ad_caa_da(const Tensor& codes, RoutingKey key) const {
  const size_t s = subnet_index(key);
  const Tensor h = stack_forward(shared_block_, codes, nullptr);
  const Tensor sub = stack_forward(subnets_[s], h, nullptr);
  const Tensor c = add(add(sub, adapter_bottleneck(h, *caa_)), h);
  return head_forward(dual_adapter(c, key), s);
}

// --- auditing ---------------------------------------------------------------

ParamCount Model::count_params(std::optional<RoutingKey> active_key) const {
  if (active_key) check_key(cfg_, *active_key);
  ParamCount pc;
  for (size_t i = 0; i < groups_.size(); ++i) {
    GroupCount gc{groups_[i].name, infos_[i].role, groups_[i].parameter_count(), true};
    if (active_key) gc.active = infos_[i].active_for(*active_key);
    if (gc.active) pc.total += gc.parameters;
    pc.groups.push_back(std::move(gc));
  }
  return pc;
}

nlohmann::ordered_json Model::describe_groups() const {
  auto arr = nlohmann::ordered_json::array();
  for (size_t i = 0; i < groups_.size(); ++i) {
    const auto& info = infos_[i];
    nlohmann::ordered_json g;
    g["name"] = groups_[i].name;
    g["role"] = to_string(info.role);
    g["dialect"] = info.dialect ? nlohmann::ordered_json(cfg_.dialects[*info.dialect])
                                : nlohmann::ordered_json(nullptr);
    g["application"] = info.application
                           ? nlohmann::ordered_json(cfg_.applications[*info.application])
                           : nlohmann::ordered_json(nullptr);
    g["parameters"] = groups_[i].parameter_count();
    g["trainable"] = groups_[i].trainable;
    arr.push_back(std::move(g));
  }
  return arr;
}

}  // namespace wefofe
