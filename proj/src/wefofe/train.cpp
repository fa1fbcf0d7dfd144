// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "wefofe/container.hpp"
#include "wefofe/error.hpp"
#include "wefofe/eval.hpp"
#include "wefofe/rng.hpp"

namespace wefofe {

namespace fs = std::filesystem;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Base: return "BASE";
    case Strategy::RI_A: return "RI_A";
    case Strategy::PT_A: return "PT_A";
    case Strategy::FT_A: return "FT_A";
  }
  return "BASE";
}

Strategy parse_strategy(std::string_view s) {
  for (Strategy x : {Strategy::Base, Strategy::RI_A, Strategy::PT_A, Strategy::FT_A})
    if (s == to_string(x)) return x;
  fail(ErrorKind::Config, "unknown training strategy '" + std::string(s) +
                              "' (expected BASE, RI_A, PT_A or FT_A)");
}

void TrainPlan::validate() const {
  require(epochs >= 1, ErrorKind::Config, "train.epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::Config, "train.batch_size must be >= 1");
  require(optimizer.learning_rate > 0.0, ErrorKind::Config, "train.learning_rate must be > 0");
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 &&
              optimizer.beta2 < 1.0,
          ErrorKind::Config, "train.beta1 and train.beta2 must lie in [0, 1)");
  require(optimizer.epsilon > 0.0, ErrorKind::Config, "train.epsilon must be > 0");
  require(patience >= 1, ErrorKind::Config, "train.patience must be >= 1");
  require(!batches_per_epoch || *batches_per_epoch >= 1, ErrorKind::Config,
          "train.batches_per_epoch must be >= 1");
  for (double p : proportions)
    require(p >= 0.0 && std::isfinite(p), ErrorKind::Config,
            "train.proportions must be finite and non-negative");
  if (strategy == Strategy::RI_A || strategy == Strategy::FT_A)
    require(dialect.has_value(), ErrorKind::Config,
            to_string(strategy) + " needs a target dialect");
}

// --- scheduling ------------------------------------------------------------

std::vector<size_t> apportion(size_t n, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(total > 0.0, ErrorKind::Data, "cannot apportion over all-zero weights");
  std::vector<size_t> out(weights.size());
  std::vector<std::pair<double, size_t>> rema;
  size_t used = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    out[i] = static_cast<size_t>(std::floor(exact));
    used += out[i];
    if (weights[i] > 0.0) rema.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t j = 0; used < n; ++j, ++used) ++out[rema[j % rema.size()].second];
  return out;
}

namespace {

// Slot i goes to the part furthest behind its ideal share (i+1)*q/n.
std::vector<size_t> interleave(const std::vector<size_t>& quota) {
  const size_t n = std::accumulate(quota.begin(), quota.end(), size_t{0});
  std::vector<size_t> out, assigned(quota.size(), 0);
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    size_t pick = quota.size();
    long double best = 0;
    for (size_t d = 0; d < quota.size(); ++d) {
      if (assigned[d] >= quota[d]) continue;
      const long double lag = static_cast<long double>(quota[d]) * static_cast<long double>(i + 1) -
                              static_cast<long double>(assigned[d]) * static_cast<long double>(n);
      if (pick == quota.size() || lag > best) {
        pick = d;
        best = lag;
      }
    }
    ++assigned[pick];
    out.push_back(pick);
  }
  return out;
}

}  // namespace

BatchSchedule::BatchSchedule(std::vector<std::vector<EventRef>> buckets, size_t dialects,
                             size_t applications, std::vector<double> proportions, uint64_t seed,
                             size_t batch_size, std::optional<size_t> batches_per_epoch)
    : buckets_(std::move(buckets)),
      dialects_(dialects),
      applications_(applications),
      seed_(seed),
      batch_size_(batch_size) {
  require(buckets_.size() == dialects * applications, ErrorKind::Internal,
          "schedule buckets do not match dialects x applications");
  require(batch_size >= 1, ErrorKind::Config, "batch size must be >= 1");
  std::vector<size_t> per_dialect(dialects, 0);
  for (size_t d = 0; d < dialects; ++d)
    for (size_t a = 0; a < applications; ++a) per_dialect[d] += buckets_[d * applications + a].size();

  if (proportions.empty()) {
    for (size_t d = 0; d < dialects; ++d) proportions.push_back(per_dialect[d] > 0 ? 1.0 : 0.0);
  }
  require(proportions.size() == dialects, ErrorKind::Config,
          "expected " + std::to_string(dialects) + " dialect proportions, got " +
              std::to_string(proportions.size()));
  size_t events = 0;
  for (size_t d = 0; d < dialects; ++d) {
    if (proportions[d] <= 0.0) continue;
    require(per_dialect[d] > 0, ErrorKind::Data,
            "dialect #" + std::to_string(d) + " has a sampling weight but no training data");
    events += per_dialect[d];
  }
  require(events > 0, ErrorKind::Data, "no training data to schedule");

  batches_ = batches_per_epoch.value_or((events + batch_size - 1) / batch_size);
  quota_ = apportion(batches_, proportions);
  dialect_order_ = interleave(quota_);
  app_order_.resize(dialects);
  for (size_t d = 0; d < dialects; ++d) {
    if (quota_[d] == 0) continue;
    std::vector<double> w(applications);
    for (size_t a = 0; a < applications; ++a)
      w[a] = static_cast<double>(buckets_[d * applications + a].size());
    app_order_[d] = interleave(apportion(quota_[d], w));
  }
}

std::vector<Batch> BatchSchedule::epoch(size_t e) const {
  struct Stream {
    Rng rng{0};
    std::vector<uint32_t> order;
    size_t cursor = 0;
  };
  std::vector<Stream> streams(buckets_.size());
  for (size_t k = 0; k < buckets_.size(); ++k) {
    auto& s = streams[k];
    s.rng = Rng(derive_seed(seed_, "epoch:" + std::to_string(e) + ":" + std::to_string(k)));
    s.order.resize(buckets_[k].size());
    std::iota(s.order.begin(), s.order.end(), 0u);
    s.rng.shuffle(s.order);
  }
  std::vector<Batch> out;
  out.reserve(batches_);
  std::vector<size_t> next_app(dialects_, 0);
  for (size_t d : dialect_order_) {
    const size_t a = app_order_[d][next_app[d]++];
    const size_t k = d * applications_ + a;
    auto& s = streams[k];
    Batch b{{d, a}, {}};
    b.events.reserve(batch_size_);
    while (b.events.size() < batch_size_) {
      if (s.cursor == s.order.size()) {
        s.rng.shuffle(s.order);
        s.cursor = 0;
      }
      b.events.push_back(buckets_[k][s.order[s.cursor++]]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

BatchSchedule make_schedule(const Dataset& data, const ArchitectureConfig& cfg,
                            const std::vector<double>& proportions, uint64_t seed,
                            size_t batch_size, std::optional<size_t> batches_per_epoch) {
  return BatchSchedule(events_by_key(data, cfg), cfg.dialects.size(), cfg.applications.size(),
                       proportions, seed, batch_size, batches_per_epoch);
}

std::string format_metrics(const ArchitectureConfig& cfg, const std::vector<EpochMetrics>& rows) {
  std::string out = "epoch\tstrategy\ttrain_loss";
  for (const auto& d : cfg.dialects) out += "\tdev_ppl:" + d;
  out += "\tdev_score\tseconds\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu\t", r.epoch);
    out += buf + to_string(r.strategy);
    std::snprintf(buf, sizeof buf, "\t%.17g", r.train_loss);
    out += buf;
    for (const auto& p : r.dev_perplexity) {
      if (p) {
        std::snprintf(buf, sizeof buf, "\t%.6f", *p);
        out += buf;
      } else {
        out += "\t-";
      }
    }
    std::snprintf(buf, sizeof buf, "\t%.6f\t%.3f\n", r.dev_score, r.seconds);
    out += buf;
  }
  return out;
}

// --- training --------------------------------------------------------------

namespace {

constexpr const char* kStateFile = "train_state.json";
constexpr const char* kOptimizerFile = "optimizer.tensors";
constexpr const char* kMetricsFile = "metrics.tsv";

nlohmann::ordered_json plan_json(const TrainPlan& p) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(p.strategy);
  j["epochs"] = p.epochs;
  j["batch_size"] = p.batch_size;
  j["optimizer"] = p.optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd";
  j["learning_rate"] = p.optimizer.learning_rate;
  j["beta1"] = p.optimizer.beta1;
  j["beta2"] = p.optimizer.beta2;
  j["epsilon"] = p.optimizer.epsilon;
  j["seed"] = p.seed;
  j["patience"] = p.patience;
  j["proportions"] = p.proportions;
  j["batches_per_epoch"] = p.batches_per_epoch ? nlohmann::ordered_json(*p.batches_per_epoch)
                                               : nlohmann::ordered_json(nullptr);
  j["dialect"] = p.dialect ? nlohmann::ordered_json(*p.dialect) : nlohmann::ordered_json(nullptr);
  j["placement"] =
      p.placement ? nlohmann::ordered_json(to_string(*p.placement)) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json metrics_json(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["strategy"] = to_string(m.strategy);
  j["train_loss"] = m.train_loss;
  auto dev = nlohmann::ordered_json::array();
  for (const auto& p : m.dev_perplexity)
    dev.push_back(p ? nlohmann::ordered_json(*p) : nlohmann::ordered_json(nullptr));
  j["dev_perplexity"] = dev;
  j["dev_score"] = m.dev_score;
  j["seconds"] = m.seconds;
  return j;
}

EpochMetrics metrics_from_json(const nlohmann::ordered_json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<size_t>();
  m.strategy = parse_strategy(j.at("strategy").get<std::string>());
  m.train_loss = j.at("train_loss").get<double>();
  for (const auto& p : j.at("dev_perplexity"))
    m.dev_perplexity.push_back(p.is_null() ? std::nullopt : std::optional<double>(p.get<double>()));
  m.dev_score = j.at("dev_score").get<double>();
  m.seconds = j.at("seconds").get<double>();
  return m;
}

std::vector<NamedTensor> optimizer_tensors(const Optimizer& opt) {
  std::vector<NamedTensor> out;
  for (const auto& [name, s] : opt.state()) {
    out.push_back({"m:" + name, {1, s.m.size()}, s.m});
    out.push_back({"v:" + name, {1, s.v.size()}, s.v});
  }
  return out;
}

struct Progress {
  std::vector<EpochMetrics> history;
  size_t best_epoch = 0;
  double best_score = INFINITY;
  size_t bad_epochs = 0;
  bool stopped_early = false;
};

class Trainer {
 public:
  Trainer(Model model, const Dataset& train, const Dataset& dev, const TrainPlan& plan,
          const TrainOptions& options, std::optional<size_t> target)
      : model_(std::move(model)),
        train_(train),
        dev_(dev),
        plan_(plan),
        options_(options),
        target_(target),
        optimizer_(plan.optimizer) {}

  TrainResult run() {
    const auto& cfg = model_.config();
    std::vector<double> proportions = plan_.proportions;
    if (target_) {
      proportions.assign(cfg.dialects.size(), 0.0);
      proportions[*target_] = 1.0;
    }
    const BatchSchedule schedule = make_schedule(train_, cfg, proportions,
                                                 derive_seed(plan_.seed, "schedule"),
                                                 plan_.batch_size, plan_.batches_per_epoch);
    prepare_dev();
    best_ = model_.snapshot();
    if (options_.resume && options_.checkpoint_dir &&
        fs::exists(*options_.checkpoint_dir / kStateFile))
      restore();

    TrainResult result{model_.clone(), {}, {}, 0, 0.0, false, false};
    while (!done()) {
      if (options_.stop_after_epoch && progress_.history.size() >= *options_.stop_after_epoch)
        return finish(std::move(result), false);
      run_epoch(schedule, result.batch_losses);
    }
    return finish(std::move(result), true);
  }

 private:
  bool done() const {
    return progress_.stopped_early || progress_.history.size() >= plan_.epochs;
  }

  void prepare_dev() {
    const auto& cfg = model_.config();
    for (size_t d = 0; d < cfg.dialects.size(); ++d) {
      if (target_ && *target_ != d) continue;
      bool any = false;
      for (const auto& k : dev_.keys) any = any || k.dialect == d;
      require(any, ErrorKind::Data, "dev set has no sentences for dialect " + cfg.dialects[d]);
    }
    if (!target_) return;
    for (size_t s = 0; s < dev_.size(); ++s)
      if (dev_.keys[s].dialect == *target_) {
        dev_subset_.sentences.push_back(dev_.sentences[s]);
        dev_subset_.keys.push_back(dev_.keys[s]);
      }
  }

  void run_epoch(const BatchSchedule& schedule, std::vector<double>& losses) {
    const auto t0 = std::chrono::steady_clock::now();
    const size_t e = progress_.history.size() + 1;
    double total = 0.0;
    const auto batches = schedule.epoch(e);
    for (const auto& b : batches) {
      const auto codes = encode_events(model_, train_, b.events);
      const auto loss =
          softmax_cross_entropy(model_.forward_codes(codes, b.key), event_targets(train_, b.events));
      loss.backward();
      optimizer_.step(model_.groups());
      total += loss.item();
      losses.push_back(loss.item());
    }

    EpochMetrics m;
    m.epoch = e;
    m.strategy = plan_.strategy;
    m.train_loss = total / static_cast<double>(batches.size());
    const auto& cfg = model_.config();
    m.dev_perplexity.assign(cfg.dialects.size(), std::nullopt);
    if (target_) {
      m.dev_perplexity[*target_] = *dialect_perplexity(model_, dev_subset_).by_dialect[*target_];
      m.dev_score = *m.dev_perplexity[*target_];
    } else {
      const auto dp = dialect_perplexity(model_, dev_);
      m.dev_perplexity = dp.by_dialect;
      m.dev_score = dp.mean;
    }
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const bool improved = m.dev_score < progress_.best_score;
    if (improved) {
      progress_.best_score = m.dev_score;
      progress_.best_epoch = e;
      progress_.bad_epochs = 0;
      best_ = model_.snapshot();
    } else if (++progress_.bad_epochs >= plan_.patience) {
      progress_.stopped_early = true;
    }
    progress_.history.push_back(m);
    if (options_.on_epoch) options_.on_epoch(model_, m);
    save(improved);
  }

  CheckpointMeta meta(size_t epoch) const {
    CheckpointMeta c;
    c.strategy = to_string(plan_.strategy);
    c.seed = plan_.seed;
    c.vocab_fingerprint = options_.vocab_fingerprint;
    c.epoch = epoch;
    c.lineage = options_.lineage;
    return c;
  }

  void save(bool improved) {
    if (!options_.checkpoint_dir) return;
    const fs::path& dir = *options_.checkpoint_dir;
    const size_t e = progress_.history.size();
    save_checkpoint(dir / "last", model_, meta(e));
    if (improved) save_checkpoint(dir / "best", model_, meta(e));
    write_container(dir / kOptimizerFile, optimizer_tensors(optimizer_));
    nlohmann::ordered_json st;
    st["plan"] = plan_json(plan_);
    st["epochs_done"] = e;
    st["best_epoch"] = progress_.best_epoch;
    st["best_score"] = progress_.best_score;
    st["bad_epochs"] = progress_.bad_epochs;
    st["stopped_early"] = progress_.stopped_early;
    nlohmann::ordered_json steps = nlohmann::ordered_json::object();
    for (const auto& [name, s] : optimizer_.state()) steps[name] = s.steps;
    st["optimizer_steps"] = steps;
    auto hist = nlohmann::ordered_json::array();
    for (const auto& h : progress_.history) hist.push_back(metrics_json(h));
    st["history"] = hist;
    write_file_bytes(dir / kStateFile, st.dump(2) + "\n");
    write_file_bytes(dir / kMetricsFile, format_metrics(model_.config(), progress_.history));
  }

  void restore() {
    const fs::path& dir = *options_.checkpoint_dir;
    nlohmann::ordered_json st;
    try {
      st = nlohmann::ordered_json::parse(read_file_bytes(dir / kStateFile));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Data, "malformed train state in '" + dir.string() + "': " + e.what());
    }
    require(st.at("plan") == plan_json(plan_), ErrorKind::Config,
            "cannot resume '" + dir.string() + "': the training plan changed");
    auto last = load_checkpoint(dir / "last");
    require(last.model.config().to_json() == model_.config().to_json(), ErrorKind::Config,
            "cannot resume '" + dir.string() + "': the architecture changed");
    model_.load_values(last.model.snapshot());
    if (progress_.best_epoch = st.at("best_epoch").get<size_t>(); progress_.best_epoch > 0)
      best_ = load_checkpoint(dir / "best").model.snapshot();
    progress_.best_score = st.at("best_score").get<double>();
    progress_.bad_epochs = st.at("bad_epochs").get<size_t>();
    progress_.stopped_early = st.at("stopped_early").get<bool>();
    for (const auto& h : st.at("history")) progress_.history.push_back(metrics_from_json(h));

    auto& state = optimizer_.mutable_state();
    state.clear();
    const auto tensors = read_container(dir / kOptimizerFile);
    std::map<std::string, const NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;
    for (const auto& [name, steps] : st.at("optimizer_steps").items()) {
      const auto m = by_name.find("m:" + name), v = by_name.find("v:" + name);
      require(m != by_name.end() && v != by_name.end(), ErrorKind::Data,
              "optimizer state lacks moments for '" + name + "'");
      state[name] = {m->second->values, v->second->values, steps.get<uint64_t>()};
    }
  }

  TrainResult finish(TrainResult result, bool finished) {
    model_.load_values(best_);
    result.model = std::move(model_);
    result.history = progress_.history;
    result.best_epoch = progress_.best_epoch;
    result.best_score = progress_.best_score;
    result.stopped_early = progress_.stopped_early;
    result.finished = finished;
    return result;
  }

  Model model_;
  const Dataset& train_;
  const Dataset& dev_;
  Dataset dev_subset_;
  TrainPlan plan_;
  TrainOptions options_;
  std::optional<size_t> target_;
  Optimizer optimizer_;
  Progress progress_;
  std::vector<NamedTensor> best_;
};

size_t dialect_index(const ArchitectureConfig& cfg, const std::string& dialect) {
  for (size_t d = 0; d < cfg.dialects.size(); ++d)
    if (cfg.dialects[d] == dialect) return d;
  fail(ErrorKind::Routing, "unknown dialect '" + dialect + "'");
}

}  // namespace

std::vector<std::string> dialect_adapter_groups(const Model& model, size_t dialect) {
  std::vector<std::string> out;
  for (size_t i = 0; i < model.groups().size(); ++i)
    if (model.info(i).role == GroupRole::DialectAdapter && model.info(i).dialect == dialect)
      out.push_back(model.groups()[i].name);
  return out;
}

Model prepare_adapter_model(const Model& source, const TrainPlan& plan) {
  plan.validate();
  require(plan.strategy == Strategy::RI_A || plan.strategy == Strategy::FT_A, ErrorKind::Config,
          "adapter training needs strategy RI_A or FT_A, got " + to_string(plan.strategy));
  const size_t d = dialect_index(source.config(), *plan.dialect);
  const uint64_t adapter_seed = derive_seed(plan.seed, "adapter");
  Model m = [&] {
    if (plan.strategy == Strategy::FT_A) {
      require(has_adapters(source.config().variant), ErrorKind::Config,
              "FT_A needs a checkpoint with pretrained adapters; " +
                  to_string(source.config().variant) + " has none");
      return source.clone();
    }
    if (!has_adapters(source.config().variant))
      return source.with_adapters(plan.placement, adapter_seed);
    require(!plan.placement || *plan.placement == source.config().effective_placement(),
            ErrorKind::Config, "adapter placement is fixed by the base checkpoint");
    Model c = source.clone();
    for (const auto& g : dialect_adapter_groups(c, d)) c.reinitialize_group(g, adapter_seed);
    return c;
  }();
  m.set_all_trainable(false);
  const auto groups = dialect_adapter_groups(m, d);
  require(!groups.empty(), ErrorKind::Config, "no adapter groups for dialect " + *plan.dialect);
  for (const auto& g : groups) m.group(g).set_trainable(true);
  return m;
}

TrainResult train_base(Model model, const Dataset& train, const Dataset& dev,
                       const TrainPlan& plan, const TrainOptions& options) {
  plan.validate();
  const Variant v = model.config().variant;
  if (plan.strategy == Strategy::Base) {
    require(v != Variant::MixtureA && v != Variant::AD_A, ErrorKind::Config,
            "variant " + to_string(v) + " carries dialect adapters; train it with PT_A");
  } else {
    require(plan.strategy == Strategy::PT_A, ErrorKind::Config,
            to_string(plan.strategy) + " starts from a checkpoint; use the adapt command");
    require(has_adapters(v), ErrorKind::Config,
            "PT_A needs an adapter-bearing variant, got " + to_string(v));
  }
  model.set_all_trainable(true);
  return Trainer(std::move(model), train, dev, plan, options, std::nullopt).run();
}

TrainResult train_adapter_ri(const Model& base, const Dataset& train, const Dataset& dev,
                             const TrainPlan& plan, const TrainOptions& options) {
  require(plan.strategy == Strategy::RI_A, ErrorKind::Config, "expected strategy RI_A");
  Model m = prepare_adapter_model(base, plan);
  const size_t d = dialect_index(m.config(), *plan.dialect);
  return Trainer(std::move(m), train, dev, plan, options, d).run();
}

TrainResult finetune_adapter(const Model& pretrained, const Dataset& train, const Dataset& dev,
                             const TrainPlan& plan, const TrainOptions& options) {
  require(plan.strategy == Strategy::FT_A, ErrorKind::Config, "expected strategy FT_A");
  Model m = prepare_adapter_model(pretrained, plan);
  const size_t d = dialect_index(m.config(), *plan.dialect);
  return Trainer(std::move(m), train, dev, plan, options, d).run();
}

}  // namespace wefofe
