// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wefofe/vocab.hpp"

namespace wefofe {

/// One line of the tagged corpus: `dialect<TAB>application<TAB>text`.
struct TaggedRecord {
  std::string dialect;
  std::string application;
  std::string text;
  bool operator==(const TaggedRecord&) const = default;
};

using Corpus = std::vector<TaggedRecord>;

std::string format_tsv(const Corpus& corpus);
Corpus parse_tsv(std::string_view text, const std::string& origin = "<memory>");
void write_tsv(const std::filesystem::path& path, const Corpus& corpus);
Corpus read_tsv(const std::filesystem::path& path);

/// Throws a Data error if any record carries a label outside the sets.
void check_labels(const Corpus& corpus, const std::vector<std::string>& dialects,
                  const std::vector<std::string>& applications);

/// Records of one dialect, order preserved.
Corpus filter_dialect(const Corpus& corpus, const std::string& dialect);

/// Top-K most frequent (lowercased) words plus the reserved tokens. Ties on
/// frequency are broken lexicographically.
Vocabulary build_vocab(const Corpus& corpus, size_t k);

/// |multi ∩ single| / |single| * 100, over known words (reserved excluded).
double coverage(const Vocabulary& multi, const Vocabulary& single);

struct CorpusStats {
  /// Word counts keyed by (dialect, application).
  std::map<std::pair<std::string, std::string>, uint64_t> words;
  uint64_t total_words = 0;
};
CorpusStats corpus_stats(const Corpus& corpus);

struct Splits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

/// Deterministic shuffle-and-cut. Ratios must sum to 1 (within 1e-9);
/// sizes are round(r * n) for train and dev, test takes the rest.
Splits split(const Corpus& corpus, std::array<double, 3> ratios, uint64_t seed);

}  // namespace wefofe
