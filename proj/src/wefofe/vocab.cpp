// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/vocab.hpp"

#include <cstdio>

#include "wefofe/container.hpp"
#include "wefofe/error.hpp"
#include "wefofe/rng.hpp"

namespace wefofe {

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (i < s.size()) {
    while (i < s.size() && space(s[i])) ++i;
    const size_t start = i;
    while (i < s.size() && !space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_.reserve(words.size() + 2);
  words_.emplace_back(kUnknownWord);
  words_.emplace_back(kBoundaryWord);
  words_.insert(words_.end(), words.begin(), words.end());
  for (TokenId id = 0; id < words_.size(); ++id) {
    const auto& w = words_[id];
    require(!w.empty() && split_whitespace(w).size() == 1 && w == split_whitespace(w)[0],
            ErrorKind::Data, "vocabulary entry " + std::to_string(id) +
                                 " is empty or contains whitespace");
    const bool fresh = ids_.emplace(w, id).second;
    require(fresh, ErrorKind::Data, "duplicate vocabulary word '" + w + "'");
  }
}

TokenId Vocabulary::id_of(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::word_of(TokenId id) const {
  require(id < words_.size(), ErrorKind::Index,
          "token id " + std::to_string(id) + " outside vocabulary of size " +
              std::to_string(words_.size()));
  return words_[id];
}

bool Vocabulary::contains(std::string_view word) const {
  return ids_.count(std::string(word)) > 0;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view line) const {
  std::vector<TokenId> out{kBoundary};
  for (const auto& w : split_whitespace(line)) out.push_back(id_of(to_lower_ascii(w)));
  out.push_back(kBoundary);
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& w : words_) {
    out += w;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = nl + 1;
  }
  require(lines.size() >= 2 && lines[0] == kUnknownWord && lines[1] == kBoundaryWord,
          ErrorKind::Data, "vocabulary must start with the reserved tokens " +
                               std::string(kUnknownWord) + " and " +
                               std::string(kBoundaryWord));
  return Vocabulary(std::vector<std::string>(lines.begin() + 2, lines.end()));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  write_file_bytes(path, serialize());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return parse(read_file_bytes(path));
}

std::string Vocabulary::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize())));
  return buf;
}

}  // namespace wefofe
