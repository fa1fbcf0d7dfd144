// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Tokenized, routed sentences and the prediction events drawn from them.
//
// A sentence is framed as [</s>, w1, ..., wn, </s>]; it yields n + 1 events,
// one per position t >= 1, predicting token t from the FOFE code of tokens
// [0, t). The code is reset at every sentence.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wefofe/corpus.hpp"
#include "wefofe/model.hpp"
#include "wefofe/vocab.hpp"

namespace wefofe {

struct Dataset {
  std::vector<std::vector<TokenId>> sentences;
  std::vector<RoutingKey> keys;

  size_t size() const noexcept { return sentences.size(); }
  size_t events() const noexcept;
};

/// Labels must be declared by `cfg` (Routing error otherwise).
Dataset make_dataset(const Corpus& corpus, const Vocabulary& vocab, const ArchitectureConfig& cfg);

struct EventRef {
  uint32_t sentence = 0;
  uint32_t target = 0;  // index of the predicted token in the sentence
};

/// Events grouped by routing key, index key.dialect * |apps| + key.application,
/// in corpus order.
std::vector<std::vector<EventRef>> events_by_key(const Dataset& data, const ArchitectureConfig& cfg);

inline size_t key_index(const ArchitectureConfig& cfg, RoutingKey key) {
  return key.dialect * cfg.applications.size() + key.application;
}

/// B x d FOFE codes of the events' histories through the model's embedding.
Tensor encode_events(const Model& model, const Dataset& data, std::span<const EventRef> events);
std::vector<size_t> event_targets(const Dataset& data, std::span<const EventRef> events);

}  // namespace wefofe
