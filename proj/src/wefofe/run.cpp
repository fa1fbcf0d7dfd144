// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/run.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wefofe/error.hpp"

namespace wefofe {
namespace {

namespace pt = boost::property_tree;

// Reads typed values from one section and remembers which keys were used.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  std::string field(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  template <class T>
  std::optional<T> number(const std::string& key) {
    const auto s = text(key);
    if (!s) return std::nullopt;
    return parse_number<T>(*s, field(key));
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (auto v = number<T>(key)) out = *v;
  }

  std::optional<std::vector<std::string>> list(const std::string& key) {
    const auto s = text(key);
    if (!s) return std::nullopt;
    std::string norm = *s;
    for (char& c : norm)
      if (c == ',') c = ' ';
    return split_whitespace(norm);
  }

  template <class T>
  std::optional<std::vector<T>> numbers(const std::string& key) {
    const auto items = list(key);
    if (!items) return std::nullopt;
    std::vector<T> out;
    for (const auto& item : *items) out.push_back(parse_number<T>(item, field(key)));
    return out;
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) continue;  // subsection, checked by the caller
      require(used_.count(key) > 0, ErrorKind::Config, "unknown config key '" + field(key) + "'");
    }
  }

  template <class T>
  static T parse_number(std::string_view s, const std::string& field) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    require(r.ec == std::errc() && r.ptr == end, ErrorKind::Config,
            field + ": expected a number, got '" + std::string(s) + "'");
    return v;
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  const auto c = root.get_child_optional(pt::ptree::path_type(name, '\0'));
  return c ? &*c : nullptr;
}

void read_plan(Section& s, TrainPlan& plan) {
  if (auto v = s.text("strategy")) plan.strategy = parse_strategy(*v);
  s.read("epochs", plan.epochs);
  s.read("batch_size", plan.batch_size);
  s.read("patience", plan.patience);
  s.read("learning_rate", plan.optimizer.learning_rate);
  s.read("beta1", plan.optimizer.beta1);
  s.read("beta2", plan.optimizer.beta2);
  s.read("epsilon", plan.optimizer.epsilon);
  if (auto v = s.text("optimizer")) {
    if (*v == "adam") {
      plan.optimizer.kind = OptimizerKind::Adam;
    } else if (*v == "sgd") {
      plan.optimizer.kind = OptimizerKind::Sgd;
    } else {
      fail(ErrorKind::Config, s.field("optimizer") + ": expected adam or sgd, got '" + *v + "'");
    }
  }
  if (auto v = s.numbers<double>("proportions")) plan.proportions = *v;
  if (auto v = s.number<size_t>("batches_per_epoch")) plan.batches_per_epoch = *v;
  if (auto v = s.text("placement")) plan.placement = parse_placement(*v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, "config line " + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::set<std::string> kSections{"corpus", "generator", "model", "train",
                                               "adapt",  "eval",      "bench"};
  for (const auto& [key, c] : root)
    if (!c.empty())
      require(kSections.count(key) > 0, ErrorKind::Config, "unknown config section [" + key + "]");

  RunConfig r;
  r.base_dir = base_dir;

  Section top(&root, "");
  const auto seed = top.number<uint64_t>("seed");
  require(seed.has_value(), ErrorKind::Config, "seed is required");
  r.seed = *seed;
  r.output_dir = resolve(base_dir, top.text("output_dir").value_or("out"));
  top.check_unknown();

  Section corpus(child(root, "corpus"), "corpus");
  if (auto v = corpus.list("dialects")) r.generator.dialects = *v;
  if (auto v = corpus.list("applications")) r.generator.applications = *v;
  corpus.read("vocab_size", r.vocab_size);
  if (auto v = corpus.text("train")) r.train_file = resolve(base_dir, *v);
  if (auto v = corpus.text("dev")) r.dev_file = resolve(base_dir, *v);
  if (auto v = corpus.text("test")) r.test_file = resolve(base_dir, *v);
  corpus.check_unknown();
  require(r.vocab_size > 2, ErrorKind::Config, "corpus.vocab_size must exceed the 2 reserved ids");
  require(!r.generator.dialects.empty(), ErrorKind::Config, "corpus.dialects is empty");
  require(!r.generator.applications.empty(), ErrorKind::Config, "corpus.applications is empty");

  Section gen(child(root, "generator"), "generator");
  gen.read("grammar_size", r.generator.grammar_size);
  gen.read("divergence", r.generator.divergence);
  gen.read("sentences_per_dialect", r.generator.sentences_per_dialect);
  gen.read("zipf_exponent", r.generator.zipf_exponent);
  if (auto v = gen.numbers<double>("split")) {
    require(v->size() == 3, ErrorKind::Config, "generator.split needs three ratios");
    r.split_ratios = {(*v)[0], (*v)[1], (*v)[2]};
  }
  gen.check_unknown();
  r.generator.seed = r.seed;

  Section model(child(root, "model"), "model");
  if (auto v = model.text("variant")) r.arch.variant = parse_variant(*v);
  model.read("d", r.arch.d);
  model.read("N", r.arch.N);
  model.read("L", r.arch.L);
  model.read("k", r.arch.k);
  model.read("alpha", r.arch.alpha);
  if (auto v = model.text("placement")) r.arch.placement = parse_placement(*v);
  model.check_unknown();
  r.arch.dialects = r.generator.dialects;
  r.arch.applications = r.generator.applications;
  {
    auto probe = r.arch;
    probe.vocab_size = r.vocab_size;
    probe.validate();
  }

  Section train(child(root, "train"), "train");
  read_plan(train, r.train);
  train.check_unknown();
  r.train.seed = r.seed;
  require(r.train.strategy == Strategy::Base || r.train.strategy == Strategy::PT_A,
          ErrorKind::Config, "train.strategy must be BASE or PT_A");
  require(!r.train.placement, ErrorKind::Config,
          "train.placement is not a key; set model.placement");
  r.train.validate();

  Section adapt(child(root, "adapt"), "adapt");
  r.adapt.strategy = Strategy::RI_A;
  read_plan(adapt, r.adapt);
  const auto dialects = adapt.list("dialects");
  adapt.check_unknown();
  r.adapt.seed = r.seed;
  require(r.adapt.strategy == Strategy::RI_A || r.adapt.strategy == Strategy::FT_A,
          ErrorKind::Config, "adapt.strategy must be RI_A or FT_A");
  if (!dialects || (dialects->size() == 1 && (*dialects)[0] == "all")) {
    r.adapt_dialects = r.generator.dialects;
  } else {
    r.adapt_dialects = *dialects;
  }
  for (const auto& d : r.adapt_dialects) {
    make_key(r.arch, d, r.arch.applications.front());
    r.adapt.dialect = d;
    r.adapt.validate();
  }
  r.adapt.dialect.reset();

  Section eval(child(root, "eval"), "eval");
  if (auto v = eval.list("checkpoints")) {
    for (const auto& item : *v) {
      const auto colon = item.find(':');
      require(colon != std::string::npos && colon > 0 && colon + 1 < item.size(),
              ErrorKind::Config, "eval.checkpoints: expected label:dir, got '" + item + "'");
      r.eval_checkpoints.emplace_back(item.substr(0, colon), item.substr(colon + 1));
    }
  }
  eval.check_unknown();

  Section bench(child(root, "bench"), "bench");
  bench.read("runs", r.bench_runs);
  bench.read("queries", r.bench_queries);
  bench.check_unknown();
  require(r.bench_runs >= 1, ErrorKind::Config, "bench.runs must be >= 1");
  require(r.bench_queries >= 1, ErrorKind::Config, "bench.queries must be >= 1");

  validate(r.generator);
  double sum = 0.0;
  for (double x : r.split_ratios) {
    require(x >= 0.0, ErrorKind::Config, "generator.split ratios must be non-negative");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::Config, "generator.split must sum to 1");
  return r;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Config, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::filesystem::path RunConfig::train_path() const {
  return train_file.value_or(data_dir() / "train.tsv");
}
std::filesystem::path RunConfig::dev_path() const {
  return dev_file.value_or(data_dir() / "dev.tsv");
}
std::filesystem::path RunConfig::test_path() const {
  return test_file.value_or(data_dir() / "test.tsv");
}

std::filesystem::path RunConfig::resolve_output(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : output_dir / p;
}

}  // namespace wefofe
