// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Template-grammar generator for multi-dialect, multi-application corpora.
//
// Each slot class (media, contact, place, ...) holds `grammar_size` concepts
// with a Zipf prior shared by every dialect. A seeded `divergence` fraction of
// each class's concepts is dialect-specific: every dialect has its own surface
// form for it (the lorry/truck situation); all other concepts share one form.
// Applications differ in their template sets: assistant requests are short
// commands, stt requests are longer dictation.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wefofe/corpus.hpp"

namespace wefofe {

struct GeneratorSpec {
  std::vector<std::string> dialects{"en_US", "en_GB", "en_IN"};
  std::vector<std::string> applications{"assistant", "stt"};
  size_t grammar_size = 200;
  double divergence = 0.3;
  size_t sentences_per_dialect = 1000;
  double zipf_exponent = 1.0;
  uint64_t seed = 1;
};

/// Throws a Config error naming the offending field.
void validate(const GeneratorSpec& spec);

/// Expected unigram distribution over words, per (dialect, application).
using GroundTruth =
    std::map<std::pair<std::string, std::string>, std::map<std::string, double>>;

struct SyntheticCorpus {
  /// One corpus per dialect, in spec order.
  std::vector<std::pair<std::string, Corpus>> by_dialect;
  GroundTruth truth;

  Corpus combined() const;
};

SyntheticCorpus generate_synthetic_corpus(const GeneratorSpec& spec);

/// `dialect<TAB>application<TAB>word<TAB>probability`, sorted by key.
std::string format_ground_truth(const GroundTruth& truth);

/// The slot-class words the generator can emit for `dialect`.
std::vector<std::string> slot_words(const GeneratorSpec& spec, const std::string& dialect);

}  // namespace wefofe
