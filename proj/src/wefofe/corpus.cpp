// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "wefofe/container.hpp"
#include "wefofe/error.hpp"
#include "wefofe/rng.hpp"

namespace wefofe {

std::string format_tsv(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus) {
    out += r.dialect;
    out += '\t';
    out += r.application;
    out += '\t';
    out += r.text;
    out += '\n';
  }
  return out;
}

Corpus parse_tsv(std::string_view text, const std::string& origin) {
  Corpus out;
  size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    require(t2 != std::string_view::npos, ErrorKind::Data,
            origin + ":" + std::to_string(line_no) +
                ": expected dialect<TAB>application<TAB>text");
    out.push_back({std::string(line.substr(0, t1)),
                   std::string(line.substr(t1 + 1, t2 - t1 - 1)),
                   std::string(line.substr(t2 + 1))});
  }
  return out;
}

void write_tsv(const std::filesystem::path& path, const Corpus& corpus) {
  write_file_bytes(path, format_tsv(corpus));
}

Corpus read_tsv(const std::filesystem::path& path) {
  return parse_tsv(read_file_bytes(path), path.string());
}

void check_labels(const Corpus& corpus, const std::vector<std::string>& dialects,
                  const std::vector<std::string>& applications) {
  auto has = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  for (const auto& r : corpus) {
    require(has(dialects, r.dialect), ErrorKind::Data,
            "record has undeclared dialect '" + r.dialect + "'");
    require(has(applications, r.application), ErrorKind::Data,
            "record has undeclared application '" + r.application + "'");
  }
}

Corpus filter_dialect(const Corpus& corpus, const std::string& dialect) {
  Corpus out;
  std::copy_if(corpus.begin(), corpus.end(), std::back_inserter(out),
               [&](const TaggedRecord& r) { return r.dialect == dialect; });
  return out;
}

Vocabulary build_vocab(const Corpus& corpus, size_t k) {
  require(k >= 1, ErrorKind::Config, "vocabulary size K must be at least 1");
  require(!corpus.empty(), ErrorKind::Data, "cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, uint64_t> counts;
  for (const auto& r : corpus)
    for (const auto& w : split_whitespace(r.text)) ++counts[to_lower_ascii(w)];
  counts.erase(std::string(Vocabulary::kUnknownWord));
  counts.erase(std::string(Vocabulary::kBoundaryWord));

  std::vector<std::pair<std::string, uint64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, c] : ranked) words.push_back(std::move(w));
  return Vocabulary(words);
}

double coverage(const Vocabulary& multi, const Vocabulary& single) {
  const auto& sw = single.words();
  require(sw.size() > 2, ErrorKind::Data, "coverage against an empty vocabulary");
  size_t hit = 0;
  for (size_t i = 2; i < sw.size(); ++i)
    if (multi.contains(sw[i])) ++hit;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(sw.size() - 2);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  for (const auto& r : corpus) {
    const auto n = split_whitespace(r.text).size();
    s.words[{r.dialect, r.application}] += n;
    s.total_words += n;
  }
  return s;
}

Splits split(const Corpus& corpus, std::array<double, 3> ratios, uint64_t seed) {
  for (double r : ratios)
    require(r >= 0.0, ErrorKind::Config, "split ratios must be non-negative");
  const double total = ratios[0] + ratios[1] + ratios[2];
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::Config,
          "split ratios must sum to 1, got " + std::to_string(total));

  const size_t n = corpus.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(idx);

  const auto n_train = std::min(n, static_cast<size_t>(std::llround(ratios[0] * n)));
  const auto n_dev =
      std::min(n - n_train, static_cast<size_t>(std::llround(ratios[1] * n)));
  Splits s;
  for (size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + n_dev ? s.dev : s.test);
    dst.push_back(corpus[idx[i]]);
  }
  return s;
}

}  // namespace wefofe
