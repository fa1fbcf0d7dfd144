// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "wefofe/corpus.hpp"
#include "wefofe/error.hpp"
#include "wefofe/synth.hpp"

using namespace wefofe;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::Internal;
}

Corpus lines(std::initializer_list<const char*> texts) {
  Corpus c;
  for (const char* t : texts) c.push_back({"en_US", "assistant", t});
  return c;
}

std::set<std::string> known_words(const Vocabulary& v) {
  return {v.words().begin() + 2, v.words().end()};
}

std::set<std::string> corpus_words(const Corpus& c) {
  std::set<std::string> out;
  for (const auto& r : c)
    for (auto& w : split_whitespace(r.text)) out.insert(to_lower_ascii(w));
  return out;
}

}  // namespace

TEST_CASE("build_vocab") {
  CHECK(known_words(build_vocab(lines({"a a b"}), 1)) == std::set<std::string>{"a"});
  CHECK(known_words(build_vocab(lines({"b a"}), 1)) == std::set<std::string>{"a"});
  CHECK(known_words(build_vocab(lines({"c b", "a"}), 10)) ==
        std::set<std::string>{"a", "b", "c"});
  const auto v = build_vocab(lines({"x y y z z z"}), 3);
  CHECK(v.words() == std::vector<std::string>{"<unk>", "</s>", "z", "y", "x"});
  CHECK(kind_of([] { build_vocab(lines({"a"}), 0); }) == ErrorKind::Config);
  CHECK(kind_of([] { build_vocab(Corpus{}, 5); }) == ErrorKind::Data);
  CHECK(build_vocab(lines({"q r", "r s"}), 2).serialize() ==
        build_vocab(lines({"q r", "r s"}), 2).serialize());
}

TEST_CASE("coverage") {
  const Vocabulary a({"x", "y", "z"}), b({"p", "q"}), c({"x", "p", "y", "w"});
  CHECK(coverage(a, a) == 100.0);
  CHECK(coverage(a, b) == 0.0);
  CHECK(coverage(a, c) == doctest::Approx(50.0));
  CHECK(kind_of([&] { coverage(a, Vocabulary()); }) == ErrorKind::Data);
}

TEST_CASE("tagged corpus round-trips through TSV") {
  const Corpus c{{"en_US", "assistant", "play music"},
                 {"en_GB", "stt", "the lorry is late"},
                 {"en_IN", "assistant", ""}};
  CHECK(parse_tsv(format_tsv(c)) == c);
  const auto path = std::filesystem::temp_directory_path() / "wefofe_data_test.tsv";
  write_tsv(path, c);
  CHECK(read_tsv(path) == c);
  std::filesystem::remove(path);
  CHECK(kind_of([] { parse_tsv("en_US assistant no tabs\n"); }) == ErrorKind::Data);
  CHECK(kind_of([&] { check_labels(c, {"en_US", "en_GB"}, {"assistant", "stt"}); }) ==
        ErrorKind::Data);
  CHECK(filter_dialect(c, "en_GB").size() == 1);
}

TEST_CASE("split") {
  Corpus c;
  for (int i = 0; i < 100; ++i) c.push_back({"en_US", "stt", "s" + std::to_string(i)});
  const auto s = split(c, {0.8, 0.1, 0.1}, 4);
  CHECK(s.train.size() == 80);
  CHECK(s.dev.size() == 10);
  CHECK(s.test.size() == 10);
  std::multiset<std::string> all;
  for (const auto* part : {&s.train, &s.dev, &s.test})
    for (const auto& r : *part) all.insert(r.text);
  CHECK(all.size() == 100);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == 100);
  const auto again = split(c, {0.8, 0.1, 0.1}, 4);
  CHECK(again.train == s.train);
  CHECK(again.dev == s.dev);
  CHECK(again.test == s.test);
  CHECK(split(c, {0.8, 0.1, 0.1}, 5).train != s.train);
  CHECK(kind_of([&] { split(c, {0.8, 0.1, 0.2}, 4); }) == ErrorKind::Config);
}

TEST_CASE("generator validation names the field") {
  GeneratorSpec spec;
  spec.divergence = 2.0;
  try {
    validate(spec);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("divergence") != std::string::npos);
  }
}

TEST_CASE("generator sizes, labels and determinism") {
  GeneratorSpec spec;
  spec.sentences_per_dialect = 301;
  spec.grammar_size = 30;
  const auto a = generate_synthetic_corpus(spec);
  REQUIRE(a.by_dialect.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(a.by_dialect[i].first == spec.dialects[i]);
    CHECK(a.by_dialect[i].second.size() == 301);
  }
  CHECK(a.combined().size() == 903);
  check_labels(a.combined(), spec.dialects, spec.applications);
  CHECK(format_tsv(generate_synthetic_corpus(spec).combined()) == format_tsv(a.combined()));
  CHECK(format_ground_truth(generate_synthetic_corpus(spec).truth) ==
        format_ground_truth(a.truth));

  // Dictation sentences run longer than assistant requests.
  double len[2] = {0, 0};
  size_t n[2] = {0, 0};
  for (const auto& r : a.combined()) {
    const size_t app = r.application == "assistant" ? 0 : 1;
    len[app] += static_cast<double>(split_whitespace(r.text).size());
    ++n[app];
  }
  CHECK(len[1] / static_cast<double>(n[1]) > len[0] / static_cast<double>(n[0]));
}

TEST_CASE("divergence 0 gives identical per-dialect distributions") {
  GeneratorSpec spec;
  spec.divergence = 0.0;
  spec.grammar_size = 25;
  spec.sentences_per_dialect = 10;
  const auto g = generate_synthetic_corpus(spec);
  for (const auto& app : spec.applications)
    for (const auto& d : spec.dialects) CHECK(g.truth.at({d, app}) == g.truth.at({"en_US", app}));
}

TEST_CASE("divergence 1 gives disjoint slot vocabularies") {
  GeneratorSpec spec;
  spec.divergence = 1.0;
  spec.grammar_size = 25;
  spec.sentences_per_dialect = 400;
  const auto g = generate_synthetic_corpus(spec);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      const auto si = slot_words(spec, spec.dialects[i]);
      const auto words_j = slot_words(spec, spec.dialects[j]);
      const std::set<std::string> sj(words_j.begin(), words_j.end());
      for (const auto& w : si) CHECK(sj.count(w) == 0);
      // Observed text carries no slot word of another dialect.
      for (const auto& w : corpus_words(g.by_dialect[i].second)) CHECK(sj.count(w) == 0);
    }
}

TEST_CASE("empirical unigrams converge to the ground truth") {
  GeneratorSpec spec;
  spec.grammar_size = 15;
  spec.sentences_per_dialect = 20000;
  spec.dialects = {"en_US", "en_GB"};
  const auto g = generate_synthetic_corpus(spec);
  for (const auto& [dialect, corpus] : g.by_dialect)
    for (const auto& app : spec.applications) {
      CAPTURE(dialect);
      CAPTURE(app);
      std::map<std::string, double> counts;
      double total = 0.0;
      for (const auto& r : corpus) {
        if (r.application != app) continue;
        for (const auto& w : split_whitespace(r.text)) {
          counts[w] += 1.0;
          total += 1.0;
        }
      }
      const auto& truth = g.truth.at({dialect, app});
      double p_sum = 0.0, chi2 = 0.0;
      for (const auto& [w, p] : truth) {
        p_sum += p;
        const double expected = total * p;
        const double observed = counts.count(w) ? counts.at(w) : 0.0;
        chi2 += (observed - expected) * (observed - expected) / expected;
      }
      for (const auto& [w, c] : counts) CHECK(truth.count(w) == 1);
      CHECK(std::abs(p_sum - 1.0) <= 1e-9);
      // Tokens within a sentence are not independent, so the bound is loose:
      // df + 10 standard deviations of a chi-square with df degrees.
      const double df = static_cast<double>(truth.size() - 1);
      CHECK(chi2 < df + 10.0 * std::sqrt(2.0 * df));
    }
}

TEST_CASE("multi-dialect vocabulary covers the single-dialect vocabularies") {
  GeneratorSpec spec;
  spec.grammar_size = 60;
  spec.divergence = 0.3;
  spec.sentences_per_dialect = 3000;
  const auto g = generate_synthetic_corpus(spec);
  const auto multi = build_vocab(g.combined(), 400);
  const auto multi_words = known_words(multi);
  for (const auto& [dialect, corpus] : g.by_dialect) {
    const auto single = build_vocab(corpus, 200);
    const auto single_words = known_words(single);
    size_t shared = 0;
    for (const auto& w : single_words) shared += multi_words.count(w);
    const double oracle = 100.0 * static_cast<double>(shared) /
                          static_cast<double>(single_words.size());
    const double cov = coverage(multi, single);
    CHECK(cov == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(cov >= 0.0);
    CHECK(cov <= 100.0);
    // Shared concepts alone (1 - divergence of slot concepts) plus the
    // template words keep coverage above the fraction of shared concepts.
    CHECK(cov > 100.0 * (1.0 - spec.divergence));
  }
  const auto counts = corpus_stats(g.combined());
  CHECK(counts.words.size() == 6);
}
