// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "support/gradcheck.hpp"
#include "wefofe/error.hpp"
#include "wefofe/fofe.hpp"
#include "wefofe/vocab.hpp"

using namespace wefofe;

namespace {

// Every sequence over [0, V) of length <= max_len, shortest first.
std::vector<std::vector<TokenId>> all_sequences(size_t V, size_t max_len) {
  std::vector<std::vector<TokenId>> out{{}};
  size_t begin = 0;
  for (size_t len = 1; len <= max_len; ++len) {
    const size_t end = out.size();
    for (size_t i = begin; i < end; ++i)
      for (TokenId w = 0; w < V; ++w) {
        auto s = out[i];
        s.push_back(w);
        out.push_back(std::move(s));
      }
    begin = end;
  }
  return out;
}

// Straight from the recursion, one step at a time.
std::vector<double> oracle_encode(const std::vector<TokenId>& s, double alpha, size_t V) {
  std::vector<double> z(V, 0.0);
  for (TokenId w : s) {
    for (double& x : z) x *= alpha;
    z[w] += 1.0;
  }
  return z;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

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

}  // namespace

TEST_CASE("explicit encoding examples") {
  CHECK(fofe_encode(std::vector<TokenId>{}, 0.7, 3) == std::vector<double>{0, 0, 0});
  CHECK(fofe_encode(std::vector<TokenId>{2}, 0.7, 4) == std::vector<double>{0, 0, 1, 0});
  CHECK(fofe_encode(std::vector<TokenId>{2, 1}, 0.5, 4) == std::vector<double>{0, 1.0, 0.5, 0});
  CHECK(fofe_encode(std::vector<TokenId>{1, 1}, 0.5, 3) == std::vector<double>{0, 1.5, 0});
}

TEST_CASE("encoding errors") {
  CHECK(kind_of([] { fofe_encode(std::vector<TokenId>{4}, 0.5, 4); }) == ErrorKind::Index);
  for (double a : {0.0, 1.0, -0.3, 1.5, std::nan("")})
    CHECK(kind_of([a] { fofe_encode(std::vector<TokenId>{0}, a, 4); }) == ErrorKind::Config);
  FofeState st(0.5, 3);
  CHECK(kind_of([&] { st.push(3); }) == ErrorKind::Index);
}

TEST_CASE("state matches the oracle, stays non-negative and resets") {
  Rng rng(5);
  FofeState st(0.6, 7);
  std::vector<TokenId> seq;
  for (int i = 0; i < 30; ++i) {
    const TokenId w = rng.below(7);
    st.push(w);
    seq.push_back(w);
    CHECK(max_abs_diff(st.code(), oracle_encode(seq, 0.6, 7)) <= 1e-12);
    for (double x : st.code()) CHECK(x >= 0.0);
  }
  CHECK(st.length() == 30);
  st.reset();
  CHECK(st.length() == 0);
  CHECK(st.code() == std::vector<double>(7, 0.0));
}

TEST_CASE("injectivity over every short sequence") {
  const auto seqs = all_sequences(5, 4);
  REQUIRE(seqs.size() == 1 + 5 + 25 + 125 + 625);
  for (double alpha : {0.5, 0.4}) {
    CAPTURE(alpha);
    std::map<std::vector<double>, size_t> seen;
    for (size_t i = 0; i < seqs.size(); ++i) {
      const auto code = fofe_encode(seqs[i], alpha, 5);
      // Distinct codes must also be well separated, not just bitwise unequal.
      seen.emplace(code, i);
    }
    CHECK(seen.size() == seqs.size());
    size_t ok = 0;
    for (const auto& s : seqs) {
      const auto back = fofe_decode_bruteforce(fofe_encode(s, alpha, 5), alpha, 5, 4);
      ok += back && *back == s;
    }
    CHECK(ok == seqs.size());
  }
}

TEST_CASE("decode edge cases") {
  const std::vector<double> zero(5, 0.0);
  const auto empty = fofe_decode_bruteforce(zero, 0.5, 5, 4);
  REQUIRE(empty);
  CHECK(empty->empty());
  CHECK_FALSE(fofe_decode_bruteforce(std::vector<double>{0, -0.1, 1, 0, 0}, 0.5, 5, 4));
  CHECK_FALSE(fofe_decode_bruteforce(std::vector<double>{0, 0.3, 0, 0, 0}, 0.5, 5, 4));
  CHECK_FALSE(fofe_decode_bruteforce(std::vector<double>{0, 1, 0}, 0.5, 5, 4));
}

TEST_CASE("linearity over concatenation") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const double alpha = 0.05 + 0.9 * rng.uniform();
    std::vector<TokenId> s1(rng.below(6)), s2(rng.below(6));
    for (auto& w : s1) w = rng.below(8);
    for (auto& w : s2) w = rng.below(8);
    auto s = s1;
    s.insert(s.end(), s2.begin(), s2.end());
    const auto z = fofe_encode(s, alpha, 8);
    const auto z1 = fofe_encode(s1, alpha, 8);
    const auto z2 = fofe_encode(s2, alpha, 8);
    const double scale = std::pow(alpha, static_cast<double>(s2.size()));
    for (size_t j = 0; j < 8; ++j) CHECK(std::abs(z[j] - (scale * z1[j] + z2[j])) <= 1e-12);
  }
}

TEST_CASE("sentence boundary reset isolates sentences") {
  FofeState a(0.7, 6), b(0.7, 6);
  for (TokenId w : {2, 3, 4}) a.push(w);
  for (TokenId w : {5, 5}) b.push(w);
  a.reset();
  b.reset();
  for (TokenId w : {1, 0, 2}) {
    a.push(w);
    b.push(w);
  }
  CHECK(a.code() == b.code());
}

TEST_CASE("embedded encoding") {
  Rng rng(23);
  const size_t V = 11, d = 6;
  auto emb = wefofe::testing::random_tensor(rng, V, d);

  const auto empty = fofe_encode_embedded(std::vector<TokenId>{}, 0.7, emb);
  CHECK(empty.values().size() == d);
  for (double x : empty.values()) CHECK(x == 0.0);
  const auto one = fofe_encode_embedded(std::vector<TokenId>{4}, 0.7, emb);
  for (size_t j = 0; j < d; ++j) CHECK(one.at(0, j) == emb.at(4, j));

  for (int i = 0; i < 30; ++i) {
    const double alpha = 0.05 + 0.9 * rng.uniform();
    std::vector<TokenId> s(1 + rng.below(12));
    for (auto& w : s) w = rng.below(V);
    const auto z = fofe_encode(s, alpha, V);
    std::vector<double> projected(d, 0.0);
    for (size_t w = 0; w < V; ++w)
      for (size_t j = 0; j < d; ++j) projected[j] += z[w] * emb.at(w, j);
    CHECK(max_abs_diff(fofe_encode_embedded(s, alpha, emb).values(), projected) <= 1e-10);
  }
}

TEST_CASE("batched embedded encoding matches single rows and is differentiable") {
  Rng rng(29);
  auto emb = wefofe::testing::random_tensor(rng, 9, 4);
  const std::vector<std::vector<TokenId>> hs{{1, 3, 3}, {}, {8}, {0, 1, 2, 3, 4, 5}};
  const auto batch = fofe_encode_batch(hs, 0.5, emb);
  REQUIRE(batch.rows() == 4);
  for (size_t r = 0; r < hs.size(); ++r) {
    const auto row = fofe_encode_embedded(hs[r], 0.5, emb);
    for (size_t j = 0; j < 4; ++j) CHECK(std::abs(batch.at(r, j) - row.at(0, j)) <= 1e-15);
  }
  auto w = wefofe::testing::random_tensor(rng, 4, 4, 1.0, false);
  CHECK(wefofe::testing::gradcheck(
            [&] { return sum(mul(fofe_encode_batch(hs, 0.5, emb), w)); }, {emb}) <= 1e-6);
}

TEST_CASE("vocabulary") {
  const Vocabulary v({"play", "music", "lorry"});
  CHECK(v.size() == 5);
  CHECK(v.id_of("<unk>") == Vocabulary::kUnknown);
  CHECK(v.id_of("</s>") == Vocabulary::kBoundary);
  for (TokenId i = 0; i < v.size(); ++i) CHECK(v.id_of(v.word_of(i)) == i);
  CHECK(v.id_of("truck") == Vocabulary::kUnknown);
  CHECK(kind_of([&] { v.word_of(5); }) == ErrorKind::Index);
  CHECK(kind_of([] { Vocabulary({"a", "a"}); }) == ErrorKind::Data);
  CHECK(kind_of([] { Vocabulary({"a b"}); }) == ErrorKind::Data);

  const auto parsed = Vocabulary::parse(v.serialize());
  CHECK(parsed.words() == v.words());
  CHECK(parsed.fingerprint() == v.fingerprint());
  CHECK(Vocabulary({"play", "lorry", "music"}).fingerprint() != v.fingerprint());
  CHECK(v.serialize() == "<unk>\n</s>\nplay\nmusic\nlorry\n");
  CHECK(kind_of([] { Vocabulary::parse("play\n</s>\n"); }) == ErrorKind::Data);
}

TEST_CASE("tokenize") {
  const Vocabulary v({"play", "music"});
  const TokenId play = v.id_of("play"), music = v.id_of("music");
  CHECK(v.tokenize("play music") == std::vector<TokenId>{1, play, music, 1});
  CHECK(v.tokenize("  Play\tMUSIC ") == std::vector<TokenId>{1, play, music, 1});
  CHECK(v.tokenize("play jazz") == std::vector<TokenId>{1, play, 0, 1});
  CHECK(v.tokenize("") == std::vector<TokenId>{1, 1});
}
