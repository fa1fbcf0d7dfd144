// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wefofe {

using TokenId = size_t;

/// Dense word <-> id map. Ids 0 and 1 are reserved for the unknown word and
/// the sentence boundary; known words follow in file order.
///
/// File format: UTF-8, one word per line, line number (from 0) is the id,
/// reserved tokens first. Immutable after construction.
class Vocabulary {
 public:
  static constexpr TokenId kUnknown = 0;
  static constexpr TokenId kBoundary = 1;
  static constexpr std::string_view kUnknownWord = "<unk>";
  static constexpr std::string_view kBoundaryWord = "</s>";

  Vocabulary();
  /// `words` excludes the reserved tokens; duplicates are a data error.
  explicit Vocabulary(const std::vector<std::string>& words);

  size_t size() const noexcept { return words_.size(); }
  TokenId id_of(std::string_view word) const;
  const std::string& word_of(TokenId id) const;
  bool contains(std::string_view word) const;
  /// All ids' words, including the reserved ones at 0 and 1.
  const std::vector<std::string>& words() const noexcept { return words_; }

  /// Lowercases, splits on whitespace, maps unknown words to kUnknown and
  /// frames the result with kBoundary on both sides.
  std::vector<TokenId> tokenize(std::string_view line) const;

  std::string serialize() const;
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  /// Hex FNV-1a of the serialized file bytes.
  std::string fingerprint() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

std::string to_lower_ascii(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace wefofe
