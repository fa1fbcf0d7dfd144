// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/dataset.hpp"

#include "wefofe/error.hpp"
#include "wefofe/fofe.hpp"

namespace wefofe {

size_t Dataset::events() const noexcept {
  size_t n = 0;
  for (const auto& s : sentences) n += s.size() - 1;
  return n;
}

Dataset make_dataset(const Corpus& corpus, const Vocabulary& vocab,
                     const ArchitectureConfig& cfg) {
  require(vocab.size() == cfg.vocab_size, ErrorKind::Comparison,
          "vocabulary has " + std::to_string(vocab.size()) + " entries, model expects " +
              std::to_string(cfg.vocab_size));
  Dataset out;
  out.sentences.reserve(corpus.size());
  out.keys.reserve(corpus.size());
  for (const auto& r : corpus) {
    out.keys.push_back(make_key(cfg, r.dialect, r.application));
    out.sentences.push_back(vocab.tokenize(r.text));
  }
  return out;
}

std::vector<std::vector<EventRef>> events_by_key(const Dataset& data,
                                                 const ArchitectureConfig& cfg) {
  std::vector<std::vector<EventRef>> out(cfg.dialects.size() * cfg.applications.size());
  for (size_t s = 0; s < data.size(); ++s) {
    auto& bucket = out[key_index(cfg, data.keys[s])];
    for (size_t t = 1; t < data.sentences[s].size(); ++t)
      bucket.push_back({static_cast<uint32_t>(s), static_cast<uint32_t>(t)});
  }
  return out;
}

Tensor encode_events(const Model& model, const Dataset& data, std::span<const EventRef> events) {
  std::vector<SparseRow> rows;
  rows.reserve(events.size());
  for (const auto& e : events) {
    const auto& s = data.sentences[e.sentence];
    rows.push_back(fofe_coefficients(std::span(s.data(), e.target), model.config().alpha));
  }
  return weighted_gather(model.embedding(), rows);
}

std::vector<size_t> event_targets(const Dataset& data, std::span<const EventRef> events) {
  std::vector<size_t> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(data.sentences[e.sentence][e.target]);
  return out;
}

}  // namespace wefofe
