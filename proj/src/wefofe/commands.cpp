// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "wefofe/checkpoint.hpp"
#include "wefofe/container.hpp"
#include "wefofe/corpus.hpp"
#include "wefofe/dataset.hpp"
#include "wefofe/error.hpp"
#include "wefofe/rng.hpp"
#include "wefofe/synth.hpp"
#include "wefofe/train.hpp"

namespace wefofe {
namespace {

namespace fs = std::filesystem;

void emit(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void require_file(const fs::path& p, const std::string& what) {
  require(fs::is_regular_file(p), ErrorKind::Config, what + ": file not found: " + p.string());
}

Corpus read_checked(const RunConfig& run, const fs::path& p, const std::string& what) {
  require_file(p, what);
  Corpus c = read_tsv(p);
  check_labels(c, run.arch.dialects, run.arch.applications);
  return c;
}

Vocabulary read_vocab(const RunConfig& run) {
  require_file(run.vocab_path(), "vocabulary (run build-vocab first)");
  return Vocabulary::load(run.vocab_path());
}

void check_fingerprint(const CheckpointMeta& meta, const Vocabulary& vocab, const fs::path& dir) {
  require(meta.vocab_fingerprint == vocab.fingerprint(), ErrorKind::Comparison,
          "checkpoint '" + dir.string() + "' was trained with vocabulary " +
              meta.vocab_fingerprint + ", the run uses " + vocab.fingerprint());
}

LoadedCheckpoint load_required(const fs::path& dir, const std::string& what) {
  require(checkpoint_exists(dir), ErrorKind::Config,
          what + ": no checkpoint at " + dir.string());
  return load_checkpoint(dir);
}

std::string metrics_line(const ArchitectureConfig& cfg, const EpochMetrics& m) {
  std::string s = to_string(m.strategy) + " epoch " + std::to_string(m.epoch) +
                  " loss " + fmt("%.4f", m.train_loss);
  for (size_t d = 0; d < m.dev_perplexity.size(); ++d)
    if (m.dev_perplexity[d]) s += " " + cfg.dialects[d] + " " + fmt("%.3f", *m.dev_perplexity[d]);
  return s + " score " + fmt("%.4f", m.dev_score);
}

nlohmann::ordered_json stage(const CheckpointMeta& meta, const std::string& dir) {
  nlohmann::ordered_json j;
  j["strategy"] = meta.strategy;
  j["seed"] = meta.seed;
  j["epoch"] = meta.epoch ? nlohmann::ordered_json(*meta.epoch) : nlohmann::ordered_json();
  j["checkpoint"] = dir;
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file_bytes(p, text);
}

fs::path latency_sibling(const fs::path& report) {
  fs::path p = report;
  return p.replace_extension().string() + ".latency.json";
}

}  // namespace

void cmd_generate(const RunConfig& run, const LogSink& log) {
  const auto synth = generate_synthetic_corpus(run.generator);
  const auto parts = split(synth.combined(), run.split_ratios, derive_seed(run.seed, "split"));
  fs::create_directories(run.data_dir());
  write_tsv(run.data_dir() / "train.tsv", parts.train);
  write_tsv(run.data_dir() / "dev.tsv", parts.dev);
  write_tsv(run.data_dir() / "test.tsv", parts.test);
  write_text(run.data_dir() / "ground_truth.tsv", format_ground_truth(synth.truth));
  emit(log, "generated " + std::to_string(parts.train.size()) + "/" +
                std::to_string(parts.dev.size()) + "/" + std::to_string(parts.test.size()) +
                " train/dev/test sentences in " + run.data_dir().string());
}

void cmd_build_vocab(const RunConfig& run, const LogSink& log) {
  const Corpus train = read_checked(run, run.train_path(), "corpus.train");
  const Vocabulary vocab = build_vocab(train, run.vocab_size - 2);
  fs::create_directories(run.output_dir);
  vocab.save(run.vocab_path());
  emit(log, "vocabulary of " + std::to_string(vocab.size()) + " ids, fingerprint " +
                vocab.fingerprint() + ", written to " + run.vocab_path().string());
}

void cmd_train(const RunConfig& run, bool resume, const LogSink& log) {
  const Corpus train_c = read_checked(run, run.train_path(), "corpus.train");
  const Corpus dev_c = read_checked(run, run.dev_path(), "corpus.dev");
  const Vocabulary vocab = read_vocab(run);
  ArchitectureConfig arch = run.arch;
  arch.vocab_size = vocab.size();
  const Dataset train = make_dataset(train_c, vocab, arch);
  const Dataset dev = make_dataset(dev_c, vocab, arch);

  TrainOptions opt;
  opt.checkpoint_dir = run.train_dir();
  opt.resume = resume;
  opt.vocab_fingerprint = vocab.fingerprint();
  opt.on_epoch = [&](const Model& m, const EpochMetrics& e) {
    emit(log, metrics_line(m.config(), e));
  };
  if (!resume && fs::exists(run.train_dir())) fs::remove_all(run.train_dir());
  const auto r = train_base(Model::build(arch, run.seed), train, dev, run.train, opt);
  emit(log, "best epoch " + std::to_string(r.best_epoch) + " score " + fmt("%.4f", r.best_score) +
                (r.stopped_early ? " (stopped early)" : "") + ", checkpoint " +
                (run.train_dir() / "best").string());
}

void cmd_adapt(const RunConfig& run, const std::optional<std::string>& dialect, bool resume,
               const LogSink& log) {
  const fs::path base_dir = run.train_dir() / "best";
  require(checkpoint_exists(base_dir), ErrorKind::Config,
          to_string(run.adapt.strategy) + " needs a base checkpoint at " + base_dir.string() +
              " (run train first)");
  auto base = load_checkpoint(base_dir);
  const Vocabulary vocab = read_vocab(run);
  check_fingerprint(base.meta, vocab, base_dir);
  const auto& arch = base.model.config();
  const Dataset train = make_dataset(read_checked(run, run.train_path(), "corpus.train"), vocab, arch);
  const Dataset dev = make_dataset(read_checked(run, run.dev_path(), "corpus.dev"), vocab, arch);

  std::vector<std::string> order = run.adapt_dialects;
  if (dialect) {
    make_key(arch, *dialect, arch.applications.front());
    order = {*dialect};
  }
  nlohmann::ordered_json lineage = base.meta.lineage;
  lineage.push_back(stage(base.meta, "train/best"));

  Model current = std::move(base.model);
  CheckpointMeta last_meta;
  for (const auto& d : order) {
    TrainPlan plan = run.adapt;
    plan.dialect = d;
    TrainOptions opt;
    opt.checkpoint_dir = run.adapt_dir() / d;
    opt.resume = resume;
    opt.vocab_fingerprint = vocab.fingerprint();
    opt.lineage = lineage;
    opt.on_epoch = [&](const Model& m, const EpochMetrics& e) {
      emit(log, d + " " + metrics_line(m.config(), e));
    };
    if (!resume && fs::exists(*opt.checkpoint_dir)) fs::remove_all(*opt.checkpoint_dir);
    auto r = plan.strategy == Strategy::FT_A ? finetune_adapter(current, train, dev, plan, opt)
                                             : train_adapter_ri(current, train, dev, plan, opt);
    emit(log, d + " best epoch " + std::to_string(r.best_epoch) + " score " +
                  fmt("%.4f", r.best_score));
    last_meta = load_checkpoint(*opt.checkpoint_dir / "best").meta;
    lineage.push_back(stage(last_meta, "adapt/" + d + "/best"));
    current = std::move(r.model);
  }
  if (dialect) return;
  CheckpointMeta meta;
  meta.strategy = to_string(run.adapt.strategy);
  meta.seed = run.seed;
  meta.vocab_fingerprint = vocab.fingerprint();
  meta.lineage = lineage;
  current.set_all_trainable(true);
  save_checkpoint(run.adapt_dir() / "final", current, meta);
  emit(log, "adapted model written to " + (run.adapt_dir() / "final").string());
}

std::vector<EvalTarget> eval_targets(const RunConfig& run,
                                     const std::optional<fs::path>& checkpoint,
                                     const std::optional<std::string>& label) {
  if (checkpoint) {
    const std::string l = label ? *label : checkpoint->filename().string();
    return {{l, *checkpoint}};
  }
  require(!label, ErrorKind::Config, "--label needs --checkpoint");
  require(!run.eval_checkpoints.empty(), ErrorKind::Config,
          "no checkpoint given and eval.checkpoints is empty");
  std::vector<EvalTarget> out;
  for (const auto& [l, p] : run.eval_checkpoints) out.push_back({l, run.resolve_output(p)});
  return out;
}

EvalReport cmd_eval(const RunConfig& run, const EvalTarget& target,
                    const std::optional<fs::path>& testset, const LogSink& log) {
  auto ck = load_required(target.checkpoint, "eval " + target.label);
  const Vocabulary vocab = read_vocab(run);
  check_fingerprint(ck.meta, vocab, target.checkpoint);
  const fs::path test_path = testset.value_or(run.test_path());
  const Dataset test =
      make_dataset(read_checked(run, test_path, "corpus.test"), vocab, ck.model.config());
  const EvalReport report = evaluate(ck.model, test, target.label, vocab.fingerprint());
  write_text(run.reports_dir() / (target.label + ".json"), report.dump());
  std::string line = target.label + ":";
  for (const auto& [d, p] : report.dialect_perplexity) line += " " + d + " " + fmt("%.3f", p);
  emit(log, line);
  return report;
}

nlohmann::ordered_json cmd_bench(const RunConfig& run, const EvalTarget& target,
                                 std::optional<size_t> runs, const LogSink& log) {
  auto ck = load_required(target.checkpoint, "bench " + target.label);
  const Vocabulary vocab = read_vocab(run);
  check_fingerprint(ck.meta, vocab, target.checkpoint);
  const auto& cfg = ck.model.config();
  const Dataset test =
      make_dataset(read_checked(run, run.test_path(), "corpus.test"), vocab, cfg);
  const size_t n_runs = runs.value_or(run.bench_runs);
  require(n_runs >= 1, ErrorKind::Config, "bench runs must be >= 1");

  nlohmann::ordered_json out;
  out["label"] = target.label;
  out["metric"] = "LM forward latency";
  out["runs"] = n_runs;
  auto entries = nlohmann::ordered_json::array();
  for (const RoutingKey key : all_keys(cfg)) {
    std::vector<std::vector<TokenId>> histories;
    for (size_t s = 0; s < test.size() && histories.size() < run.bench_queries; ++s) {
      if (!(test.keys[s] == key)) continue;
      const auto& toks = test.sentences[s];
      for (size_t t = 1; t < toks.size() && histories.size() < run.bench_queries; ++t)
        histories.emplace_back(toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(t));
    }
    if (histories.empty()) continue;
    const auto stats = bench_model(ck.model, key, histories, n_runs);
    nlohmann::ordered_json e;
    e["dialect"] = cfg.dialects[key.dialect];
    e["application"] = cfg.applications[key.application];
    e["stats"] = stats.to_json();
    entries.push_back(std::move(e));
    emit(log, target.label + " " + cfg.dialects[key.dialect] + "/" +
                  cfg.applications[key.application] + " mean " + fmt("%.4f", stats.mean_ms) +
                  " ms p95 " + fmt("%.4f", stats.p95_ms) + " ms over " +
                  std::to_string(n_runs) + " runs");
  }
  require(!entries.empty(), ErrorKind::Data, "bench: the test set has no queries");
  out["entries"] = std::move(entries);
  write_text(run.reports_dir() / (target.label + ".latency.json"), out.dump(2) + "\n");
  return out;
}

std::string cmd_inspect(const fs::path& checkpoint) {
  const auto ck = load_required(checkpoint, "inspect");
  const auto& m = ck.model;
  const auto& c = m.config();
  std::ostringstream os;
  os << "checkpoint\t" << checkpoint.string() << "\n"
     << "variant\t" << to_string(c.variant) << "\n"
     << "strategy\t" << ck.meta.strategy << "\n"
     << "vocabulary\t" << c.vocab_size << " ids, fingerprint " << ck.meta.vocab_fingerprint
     << "\n"
     << "shape\td=" << c.d << " N=" << c.N << " L=" << c.L << " k=" << c.k
     << " alpha=" << c.alpha << "\n";
  if (has_adapters(c.variant)) os << "placement\t" << to_string(c.effective_placement()) << "\n";
  os << "total_parameters\t" << m.total_params() << "\n\n"
     << "group\trole\tdialect\tapplication\tparameters\n";
  for (const auto& g : m.describe_groups()) {
    auto label = [](const nlohmann::ordered_json& v) {
      return v.is_null() ? std::string("-") : v.get<std::string>();
    };
    os << g["name"].get<std::string>() << "\t" << g["role"].get<std::string>() << "\t"
       << label(g["dialect"]) << "\t" << label(g["application"]) << "\t"
       << g["parameters"].get<size_t>() << "\n";
  }
  os << "\nkey\tactive_parameters\n";
  for (const RoutingKey k : all_keys(c))
    os << c.dialects[k.dialect] << "/" << c.applications[k.application] << "\t"
       << m.active_params(k) << "\n";
  return os.str();
}

std::string cmd_compare(const std::vector<fs::path>& reports, const std::optional<fs::path>& out) {
  require(!reports.empty(), ErrorKind::Config, "compare needs at least one report");
  std::vector<EvalReport> loaded;
  for (const auto& p : reports) {
    require(fs::is_regular_file(p), ErrorKind::Io, "report not found: " + p.string());
    EvalReport r;
    try {
      r = EvalReport::from_json(nlohmann::ordered_json::parse(read_file_bytes(p)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Data, "malformed report '" + p.string() + "': " + e.what());
    }
    const fs::path lat = latency_sibling(p);
    if (r.latency.empty() && fs::is_regular_file(lat)) {
      try {
        const auto j = nlohmann::ordered_json::parse(read_file_bytes(lat));
        for (const auto& e : j.at("entries"))
          r.latency.push_back({e.at("dialect").get<std::string>(),
                               e.at("application").get<std::string>(),
                               LatencyStats::from_json(e.at("stats"))});
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Data, "malformed latency file '" + lat.string() + "': " + e.what());
      }
    }
    loaded.push_back(std::move(r));
  }
  const std::string table = compare(loaded);
  if (out) write_text(*out, table);
  return table;
}

}  // namespace wefofe
