// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <span>
#include <string_view>

#include "wefofe/error.hpp"
#include "wefofe/rng.hpp"

namespace wefofe {

namespace {

constexpr std::array<std::string_view, 6> kClasses{"media", "contact", "place",
                                                   "thing", "action", "time"};

// A template is a sequence of tokens; "[k]" names slot class k.
struct Template {
  std::string_view text;
  double weight;
};

constexpr std::array<Template, 8> kAssistant{{
    {"play [0] by [1]", 4.0},
    {"call [1]", 3.0},
    {"set a timer for [5]", 3.0},
    {"navigate to [2]", 2.0},
    {"what is the weather in [2]", 2.0},
    {"remind me to [4] the [3] at [5]", 1.5},
    {"open [3]", 1.0},
    {"send a message to [1]", 1.0},
}};

constexpr std::array<Template, 6> kDictation{{
    {"i will [4] the [3] when i get to [2]", 3.0},
    {"please [4] the [3] and [4] the [3] before [5]", 2.0},
    {"hey [1] can you bring the [3] to [2] tomorrow", 2.0},
    {"we should [4] [0] with [1] at [5]", 1.5},
    {"thanks for the [3] it was great to see you in [2]", 1.5},
    {"let me know if [1] wants to [4] the [3]", 1.0},
}};

std::span<const Template> templates_for(size_t app_index) {
  // First application uses short commands, every other one uses dictation.
  if (app_index == 0) return kAssistant;
  return kDictation;
}

struct Slot {
  bool is_slot;
  size_t cls;
  std::string word;
};

std::vector<Slot> parse_template(std::string_view text) {
  std::vector<Slot> out;
  for (const auto& tok : split_whitespace(text)) {
    if (tok.size() == 3 && tok.front() == '[' && tok.back() == ']')
      out.push_back({true, static_cast<size_t>(tok[1] - '0'), {}});
    else
      out.push_back({false, 0, tok});
  }
  return out;
}

class Lexicon {
 public:
  explicit Lexicon(const GeneratorSpec& spec) {
    const auto n_div = static_cast<size_t>(
        std::llround(spec.divergence * static_cast<double>(spec.grammar_size)));
    divergent_.assign(kClasses.size(), std::vector<bool>(spec.grammar_size, false));
    for (size_t c = 0; c < kClasses.size(); ++c) {
      std::vector<size_t> idx(spec.grammar_size);
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(derive_seed(spec.seed, "divergent:" + std::string(kClasses[c])));
      rng.shuffle(idx);
      for (size_t i = 0; i < n_div; ++i) divergent_[c][idx[i]] = true;
    }
    cumulative_.resize(spec.grammar_size);
    prior_.resize(spec.grammar_size);
    double acc = 0.0;
    for (size_t i = 0; i < spec.grammar_size; ++i) {
      prior_[i] = 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_exponent);
      acc += prior_[i];
      cumulative_[i] = acc;
    }
    for (double& p : prior_) p /= acc;
  }

  std::string form(size_t cls, size_t concept_id, const std::string& dialect) const {
    std::string w = std::string(kClasses[cls]) + std::to_string(concept_id);
    if (divergent_[cls][concept_id]) w += "-" + to_lower_ascii(dialect);
    return w;
  }

  size_t draw(Rng& rng) const { return rng.categorical(cumulative_); }
  double prior(size_t concept_id) const { return prior_[concept_id]; }

 private:
  std::vector<std::vector<bool>> divergent_;
  std::vector<double> cumulative_;
  std::vector<double> prior_;
};

std::vector<double> cumulative_weights(std::span<const Template> ts) {
  std::vector<double> c;
  double acc = 0.0;
  for (const auto& t : ts) c.push_back(acc += t.weight);
  return c;
}

}  // namespace

void validate(const GeneratorSpec& spec) {
  require(!spec.dialects.empty(), ErrorKind::Config, "generate.dialects: must not be empty");
  require(!spec.applications.empty(), ErrorKind::Config,
          "generate.applications: must not be empty");
  require(std::set<std::string>(spec.dialects.begin(), spec.dialects.end()).size() ==
              spec.dialects.size(),
          ErrorKind::Config, "generate.dialects: duplicate label");
  require(std::set<std::string>(spec.applications.begin(), spec.applications.end())
                  .size() == spec.applications.size(),
          ErrorKind::Config, "generate.applications: duplicate label");
  require(spec.grammar_size >= 1, ErrorKind::Config, "generate.grammar_size: must be >= 1");
  require(spec.divergence >= 0.0 && spec.divergence <= 1.0, ErrorKind::Config,
          "generate.divergence: must lie in [0,1], got " + std::to_string(spec.divergence));
  require(spec.zipf_exponent >= 0.0, ErrorKind::Config,
          "generate.zipf_exponent: must be >= 0");
}

Corpus SyntheticCorpus::combined() const {
  Corpus out;
  for (const auto& [d, c] : by_dialect) out.insert(out.end(), c.begin(), c.end());
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const GeneratorSpec& spec) {
  validate(spec);
  const Lexicon lex(spec);
  const size_t n_apps = spec.applications.size();

  std::vector<std::vector<std::vector<Slot>>> parsed(n_apps);
  std::vector<std::vector<double>> cum(n_apps);
  for (size_t a = 0; a < n_apps; ++a) {
    for (const auto& t : templates_for(a)) parsed[a].push_back(parse_template(t.text));
    cum[a] = cumulative_weights(templates_for(a));
  }

  SyntheticCorpus out;
  for (const auto& dialect : spec.dialects) {
    Rng rng(derive_seed(spec.seed, "sentences:" + dialect));
    Corpus corpus;
    corpus.reserve(spec.sentences_per_dialect);
    for (size_t s = 0; s < spec.sentences_per_dialect; ++s) {
      const size_t a = s % n_apps;
      const auto& tpl = parsed[a][rng.categorical(cum[a])];
      std::string text;
      for (const auto& slot : tpl) {
        if (!text.empty()) text += ' ';
        text += slot.is_slot ? lex.form(slot.cls, lex.draw(rng), dialect) : slot.word;
      }
      corpus.push_back({dialect, spec.applications[a], std::move(text)});
    }
    out.by_dialect.emplace_back(dialect, std::move(corpus));

    // Expected counts per sentence, normalized by expected length.
    for (size_t a = 0; a < n_apps; ++a) {
      const auto ts = templates_for(a);
      const double wsum = cum[a].back();
      std::map<std::string, double> expected;
      double length = 0.0;
      for (size_t t = 0; t < ts.size(); ++t) {
        const double pt = ts[t].weight / wsum;
        for (const auto& slot : parsed[a][t]) {
          length += pt;
          if (!slot.is_slot) {
            expected[slot.word] += pt;
            continue;
          }
          for (size_t i = 0; i < spec.grammar_size; ++i)
            expected[lex.form(slot.cls, i, dialect)] += pt * lex.prior(i);
        }
      }
      for (auto& [w, p] : expected) p /= length;
      out.truth[{dialect, spec.applications[a]}] = std::move(expected);
    }
  }
  return out;
}

std::string format_ground_truth(const GroundTruth& truth) {
  std::string out;
  char buf[64];
  for (const auto& [key, dist] : truth)
    for (const auto& [w, p] : dist) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out += key.first + '\t' + key.second + '\t' + w + '\t' + buf + '\n';
    }
  return out;
}

std::vector<std::string> slot_words(const GeneratorSpec& spec, const std::string& dialect) {
  const Lexicon lex(spec);
  std::vector<std::string> out;
  for (size_t c = 0; c < kClasses.size(); ++c)
    for (size_t i = 0; i < spec.grammar_size; ++i) out.push_back(lex.form(c, i, dialect));
  return out;
}

}  // namespace wefofe
