// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wefofe/error.hpp"
#include "wefofe/rng.hpp"

namespace wefofe {

void NllAccumulator::add(double nll, size_t tokens) {
  // Neumaier summation.
  const double t = sum_ + nll;
  if (std::abs(sum_) >= std::abs(nll))
    comp_ += (sum_ - t) + nll;
  else
    comp_ += (nll - t) + sum_;
  sum_ = t;
  tokens_ += tokens;
}

void NllAccumulator::merge(const NllAccumulator& other) {
  add(other.sum_, other.tokens_);
  add(other.comp_, 0);
}

double NllAccumulator::perplexity() const {
  require(tokens_ > 0, ErrorKind::Data, "perplexity of an empty evaluation set");
  return std::exp(nll() / static_cast<double>(tokens_));
}

std::vector<NllAccumulator> score_dataset(const Model& model, const Dataset& data,
                                          size_t batch_size) {
  const auto& cfg = model.config();
  const auto buckets = events_by_key(data, cfg);
  std::vector<NllAccumulator> out(buckets.size());
  NoGradGuard no_grad;
  for (auto key : all_keys(cfg)) {
    const auto& events = buckets[key_index(cfg, key)];
    for (size_t begin = 0; begin < events.size(); begin += batch_size) {
      const std::span<const EventRef> batch(events.data() + begin,
                                            std::min(batch_size, events.size() - begin));
      const auto logits = model.forward_codes(encode_events(model, data, batch), key);
      for (double nll : row_nll(logits, event_targets(data, batch)))
        out[key_index(cfg, key)].add(nll);
    }
  }
  return out;
}

double perplexity(const Model& model, const Dataset& data, RoutingKey key) {
  check_key(model.config(), key);
  Dataset subset;
  for (size_t s = 0; s < data.size(); ++s)
    if (data.keys[s] == key) {
      subset.sentences.push_back(data.sentences[s]);
      subset.keys.push_back(key);
    }
  return score_dataset(model, subset)[key_index(model.config(), key)].perplexity();
}

DialectPerplexity dialect_perplexity(const Model& model, const Dataset& data) {
  const auto& cfg = model.config();
  const auto acc = score_dataset(model, data);
  DialectPerplexity out;
  size_t present = 0;
  for (size_t d = 0; d < cfg.dialects.size(); ++d) {
    NllAccumulator pooled;
    for (size_t a = 0; a < cfg.applications.size(); ++a)
      pooled.merge(acc[key_index(cfg, {d, a})]);
    out.by_dialect.push_back(pooled.tokens() ? std::optional(pooled.perplexity()) : std::nullopt);
    if (out.by_dialect.back()) {
      out.mean += *out.by_dialect.back();
      ++present;
    }
  }
  require(present > 0, ErrorKind::Data, "perplexity of an empty evaluation set");
  out.mean /= static_cast<double>(present);
  return out;
}

UnigramModel::UnigramModel(const Dataset& train, size_t vocab_size) {
  std::vector<double> counts(vocab_size, 1.0);
  double total = static_cast<double>(vocab_size);
  for (const auto& s : train.sentences)
    for (size_t t = 1; t < s.size(); ++t) {
      require(s[t] < vocab_size, ErrorKind::Index, "token id outside the unigram vocabulary");
      counts[s[t]] += 1.0;
      total += 1.0;
    }
  log_probs_.resize(vocab_size);
  for (size_t w = 0; w < vocab_size; ++w) log_probs_[w] = std::log(counts[w] / total);
}

double UnigramModel::perplexity(const Dataset& data, std::optional<size_t> dialect) const {
  NllAccumulator acc;
  for (size_t s = 0; s < data.size(); ++s) {
    if (dialect && data.keys[s].dialect != *dialect) continue;
    for (size_t t = 1; t < data.sentences[s].size(); ++t)
      acc.add(-log_probs_.at(data.sentences[s][t]));
  }
  return acc.perplexity();
}

// --- latency ---------------------------------------------------------------

double percentile_nearest_rank(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::Data, "percentile of an empty sample");
  require(q > 0.0 && q <= 1.0, ErrorKind::Config, "percentile must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<size_t>(std::ceil(q * n - 1e-9));
  return values[std::max<size_t>(rank, 1) - 1];
}

bool equally_fast(double a, double b) {
  require(a > 0.0, ErrorKind::Data, "latency baseline must be positive");
  return std::abs(b - a) / a < 0.10;
}

nlohmann::ordered_json LatencyStats::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = "LM forward latency";
  j["runs"] = runs.size();
  j["queries"] = queries;
  j["mean_ms"] = mean_ms;
  j["p95_ms"] = p95_ms;
  auto per_run = nlohmann::ordered_json::array();
  for (const auto& r : runs) per_run.push_back({{"mean_ms", r.mean_ms}, {"p95_ms", r.p95_ms}});
  j["per_run"] = per_run;
  return j;
}

LatencyStats LatencyStats::from_json(const nlohmann::ordered_json& j) {
  LatencyStats s;
  s.queries = j.at("queries").get<size_t>();
  s.mean_ms = j.at("mean_ms").get<double>();
  s.p95_ms = j.at("p95_ms").get<double>();
  for (const auto& r : j.at("per_run"))
    s.runs.push_back({r.at("mean_ms").get<double>(), r.at("p95_ms").get<double>()});
  return s;
}

LatencyStats summarize_latency(const std::vector<std::vector<double>>& per_run_ms) {
  require(!per_run_ms.empty(), ErrorKind::Config, "bench needs at least one run");
  LatencyStats s;
  for (const auto& run : per_run_ms) {
    require(!run.empty(), ErrorKind::Data, "bench needs at least one query");
    double total = 0.0;
    for (double x : run) total += x;
    s.runs.push_back({total / static_cast<double>(run.size()), percentile_nearest_rank(run, 0.95)});
    s.mean_ms += s.runs.back().mean_ms / static_cast<double>(per_run_ms.size());
    s.p95_ms += s.runs.back().p95_ms / static_cast<double>(per_run_ms.size());
  }
  s.queries = per_run_ms.front().size();
  return s;
}

LatencyStats bench_latency(const std::function<void(size_t)>& query, size_t queries,
                           size_t runs) {
  require(queries > 0, ErrorKind::Data, "bench needs at least one query");
  require(runs > 0, ErrorKind::Config, "bench needs at least one run");
  using clock = std::chrono::steady_clock;
  std::vector<std::vector<double>> per_run(runs, std::vector<double>(queries));
  for (size_t r = 0; r < runs; ++r)
    for (size_t i = 0; i < queries; ++i) {
      const auto t0 = clock::now();
      query(i);
      const auto t1 = clock::now();
      per_run[r][i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  return summarize_latency(per_run);
}

LatencyStats bench_model(const Model& model, RoutingKey key,
                         const std::vector<std::vector<TokenId>>& histories, size_t runs) {
  require(!histories.empty(), ErrorKind::Data, "bench needs at least one query");
  NoGradGuard no_grad;
  volatile double sink = 0.0;
  return bench_latency(
      [&](size_t i) {
        const auto logits = model.forward(std::span(&histories[i], 1), key);
        sink = sink + logits.values()[0];
      },
      histories.size(), runs);
}

// --- reports ---------------------------------------------------------------

std::string config_fingerprint(const ArchitectureConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg.to_json().dump())));
  return buf;
}

EvalReport evaluate(const Model& model, const Dataset& data, const std::string& label,
                    const std::string& vocab_fingerprint) {
  require(data.size() > 0, ErrorKind::Data, "evaluation set is empty");
  const auto& cfg = model.config();
  EvalReport r;
  r.label = label;
  r.variant = to_string(cfg.variant);
  r.config_fingerprint = config_fingerprint(cfg);
  r.vocab_fingerprint = vocab_fingerprint;
  const auto acc = score_dataset(model, data);
  for (auto key : all_keys(cfg)) {
    const auto& a = acc[key_index(cfg, key)];
    if (a.tokens() == 0) continue;
    r.perplexity.push_back({cfg.dialects[key.dialect], cfg.applications[key.application],
                            a.tokens(), a.perplexity()});
  }
  for (size_t d = 0; d < cfg.dialects.size(); ++d) {
    NllAccumulator pooled;
    for (size_t a = 0; a < cfg.applications.size(); ++a) pooled.merge(acc[key_index(cfg, {d, a})]);
    if (pooled.tokens() > 0) r.dialect_perplexity.emplace_back(cfg.dialects[d], pooled.perplexity());
  }
  r.total_params = model.total_params();
  for (auto key : all_keys(cfg))
    r.active_params.emplace_back(cfg.dialects[key.dialect] + "/" + cfg.applications[key.application],
                                 model.active_params(key));
  return r;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["variant"] = variant;
  j["accuracy_metric"] = "perplexity (accuracy proxy, not WER)";
  j["config_fingerprint"] = config_fingerprint;
  j["vocab_fingerprint"] = vocab_fingerprint;
  auto ppl = nlohmann::ordered_json::array();
  for (const auto& e : perplexity)
    ppl.push_back({{"dialect", e.dialect},
                   {"application", e.application},
                   {"tokens", e.tokens},
                   {"perplexity", e.perplexity}});
  j["perplexity"] = ppl;
  nlohmann::ordered_json by_dialect = nlohmann::ordered_json::object();
  for (const auto& [d, p] : dialect_perplexity) by_dialect[d] = p;
  j["dialect_perplexity"] = by_dialect;
  nlohmann::ordered_json params;
  params["total"] = total_params;
  nlohmann::ordered_json active = nlohmann::ordered_json::object();
  for (const auto& [k, n] : active_params) active[k] = n;
  params["active"] = active;
  j["parameters"] = params;
  auto lat = nlohmann::ordered_json::array();
  for (const auto& e : latency) {
    auto entry = e.stats.to_json();
    entry["dialect"] = e.dialect;
    entry["application"] = e.application;
    lat.push_back(std::move(entry));
  }
  j["latency"] = lat;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::ordered_json& j) {
  try {
    EvalReport r;
    r.label = j.at("label").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
    for (const auto& e : j.at("perplexity"))
      r.perplexity.push_back({e.at("dialect").get<std::string>(),
                              e.at("application").get<std::string>(),
                              e.at("tokens").get<size_t>(), e.at("perplexity").get<double>()});
    for (const auto& [d, p] : j.at("dialect_perplexity").items())
      r.dialect_perplexity.emplace_back(d, p.get<double>());
    r.total_params = j.at("parameters").at("total").get<size_t>();
    for (const auto& [k, v] : j.at("parameters").at("active").items())
      r.active_params.emplace_back(k, v.get<size_t>());
    for (const auto& e : j.at("latency"))
      r.latency.push_back({e.at("dialect").get<std::string>(),
                           e.at("application").get<std::string>(), LatencyStats::from_json(e)});
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed evaluation report: ") + e.what());
  }
}

std::string EvalReport::dump() const { return to_json().dump(2) + "\n"; }

namespace {

struct Column {
  std::string name;
  bool integer = false;
  std::vector<std::optional<double>> values;
};

std::string format_cell(const Column& c, size_t row, bool best) {
  const auto& v = c.values[row];
  if (!v) return "-";
  char buf[64];
  if (c.integer)
    std::snprintf(buf, sizeof buf, "%.0f", *v);
  else
    std::snprintf(buf, sizeof buf, "%.4f", *v);
  return std::string(buf) + (best ? "*" : "");
}

}  // namespace

std::string compare(const std::vector<EvalReport>& reports) {
  require(!reports.empty(), ErrorKind::Data, "nothing to compare");
  for (const auto& r : reports)
    require(r.vocab_fingerprint == reports.front().vocab_fingerprint, ErrorKind::Comparison,
            "report '" + r.label + "' uses vocabulary " + r.vocab_fingerprint + ", '" +
                reports.front().label + "' uses " + reports.front().vocab_fingerprint);

  std::vector<std::string> dialects;
  for (const auto& r : reports)
    for (const auto& [d, p] : r.dialect_perplexity)
      if (std::find(dialects.begin(), dialects.end(), d) == dialects.end()) dialects.push_back(d);

  const size_t n = reports.size();
  std::vector<Column> cols;
  auto add = [&](std::string name, bool integer, auto&& get) {
    Column c{std::move(name), integer, {}};
    for (const auto& r : reports) c.values.push_back(get(r));
    cols.push_back(std::move(c));
  };
  add("params_total", true, [](const EvalReport& r) -> std::optional<double> {
    return static_cast<double>(r.total_params);
  });
  add("params_active_max", true, [](const EvalReport& r) -> std::optional<double> {
    size_t m = 0;
    for (const auto& [k, v] : r.active_params) m = std::max(m, v);
    return static_cast<double>(m);
  });
  for (const auto& d : dialects)
    add("ppl:" + d, false, [&](const EvalReport& r) -> std::optional<double> {
      for (const auto& [name, p] : r.dialect_perplexity)
        if (name == d) return p;
      return std::nullopt;
    });
  add("ppl:mean", false, [](const EvalReport& r) -> std::optional<double> {
    if (r.dialect_perplexity.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& [d, p] : r.dialect_perplexity) s += p;
    return s / static_cast<double>(r.dialect_perplexity.size());
  });
  const bool any_latency =
      std::any_of(reports.begin(), reports.end(), [](const auto& r) { return !r.latency.empty(); });
  if (any_latency) {
    auto avg = [](const EvalReport& r, bool p95) -> std::optional<double> {
      if (r.latency.empty()) return std::nullopt;
      double s = 0.0;
      for (const auto& e : r.latency) s += p95 ? e.stats.p95_ms : e.stats.mean_ms;
      return s / static_cast<double>(r.latency.size());
    };
    add("latency_mean_ms", false, [&](const EvalReport& r) { return avg(r, false); });
    add("latency_p95_ms", false, [&](const EvalReport& r) { return avg(r, true); });
  }

  std::string out = "label\tvariant";
  for (const auto& c : cols) out += "\t" + c.name;
  out += "\n";
  for (size_t i = 0; i < n; ++i) {
    out += reports[i].label + "\t" + reports[i].variant;
    for (const auto& c : cols) {
      std::optional<double> best;
      for (const auto& v : c.values)
        if (v && (!best || *v < *best)) best = v;
      out += "\t" + format_cell(c, i, c.values[i] && *c.values[i] == *best);
    }
    out += "\n";
  }
  return out;
}

}  // namespace wefofe
