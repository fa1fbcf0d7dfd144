// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// Links only the shared library and its C header.

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "wefofe/wefofe.h"

namespace fs = std::filesystem;

namespace {

const char* kConfig =
    "seed = 8\n"
    "[corpus]\nvocab_size = 80\n"
    "[generator]\ngrammar_size = 12\nsentences_per_dialect = 100\n"
    "[model]\nvariant = AD\nd = 6\nL = 1\nk = 2\n"
    "[train]\nepochs = 1\nbatch_size = 16\n";

struct Fixture {
  fs::path dir;
  wf_run* run = nullptr;

  Fixture() {
    dir = fs::temp_directory_path() / "wefofe_capi_test";
    fs::remove_all(dir);
    REQUIRE(wf_run_parse(kConfig, dir.c_str(), &run) == WF_OK);
    REQUIRE(wf_generate(run) == WF_OK);
    REQUIRE(wf_build_vocab(run) == WF_OK);
    REQUIRE(wf_train(run, 0) == WF_OK);
  }
  ~Fixture() { wf_run_free(run); }
  std::string checkpoint() const { return (dir / "out/train/best").string(); }
};

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(wf_status_name(WF_OK)) == "ok");
  CHECK(std::string(wf_status_name(WF_ERR_CONFIG)) == "config");
  CHECK(std::string(wf_status_name(WF_ERR_COMPARISON)) == "comparison");
  CHECK(std::string(wf_status_name(WF_ERR_ARGUMENT)) == "argument");
  CHECK(std::string(wf_version()) == "0.1.0");

  wf_run* run = nullptr;
  CHECK(wf_run_parse(nullptr, nullptr, &run) == WF_ERR_ARGUMENT);
  CHECK(std::string(wf_last_error()).find("null") != std::string::npos);
  CHECK(wf_run_parse("[generator]\ndivergence = 0.5\n", nullptr, &run) == WF_ERR_CONFIG);
  CHECK(std::string(wf_last_error()) == "seed is required");
  CHECK(wf_run_parse("seed = 1\n[generator]\ndivergence = -1\n", nullptr, &run) == WF_ERR_CONFIG);
  CHECK(std::string(wf_last_error()).find("divergence") != std::string::npos);
  CHECK(run == nullptr);
  CHECK(wf_run_parse("seed = 1\n", nullptr, &run) == WF_OK);
  CHECK(std::string(wf_last_error()).empty());
  wf_run_free(run);

  wf_model* m = nullptr;
  CHECK(wf_model_load("/nonexistent/checkpoint", &m) == WF_ERR_IO);
  wf_model_free(nullptr);
  wf_vocab_free(nullptr);
  wf_string_free(nullptr);
}

TEST_CASE("models through the C interface") {
  Fixture f;
  char* out_dir = nullptr;
  REQUIRE(wf_run_output_dir(f.run, &out_dir) == WF_OK);
  CHECK(fs::path(out_dir) == f.dir / "out");
  wf_string_free(out_dir);

  wf_model* m = nullptr;
  REQUIRE(wf_model_load(f.checkpoint().c_str(), &m) == WF_OK);
  wf_vocab* v = nullptr;
  REQUIRE(wf_vocab_load((f.dir / "out/vocab.txt").c_str(), &v) == WF_OK);

  size_t V = 0, vs = 0, total = 0, active = 0;
  REQUIRE(wf_model_vocab_size(m, &V) == WF_OK);
  REQUIRE(wf_vocab_size(v, &vs) == WF_OK);
  CHECK(V == vs);
  REQUIRE(wf_model_total_params(m, &total) == WF_OK);
  REQUIRE(wf_model_active_params(m, "en_GB", "stt", &active) == WF_OK);
  CHECK(active < total);
  CHECK(wf_model_active_params(m, "en_AU", "stt", &active) == WF_ERR_ROUTING);

  std::vector<double> lp(V);
  const uint32_t hist[] = {1};
  REQUIRE(wf_model_next_log_probs(m, "en_US", "assistant", hist, 1, lp.data(), V) == WF_OK);
  double mass = 0.0;
  for (double x : lp) mass += std::exp(x);
  CHECK(std::abs(mass - 1.0) <= 1e-12);
  CHECK(wf_model_next_log_probs(m, "en_US", "assistant", hist, 1, lp.data(), V - 1) ==
        WF_ERR_DIMENSION);
  const uint32_t bad[] = {1, static_cast<uint32_t>(V)};
  CHECK(wf_model_next_log_probs(m, "en_US", "assistant", bad, 2, lp.data(), V) == WF_ERR_INDEX);

  // Sentence score equals the chain of next-word log-probabilities.
  const char* sentence = "play the music";
  double nll = 0.0;
  size_t tokens = 0;
  REQUIRE(wf_model_score(m, v, "en_US", "assistant", sentence, &nll, &tokens) == WF_OK);
  CHECK(tokens == 4);
  std::vector<uint32_t> ids{1};
  double chain = 0.0;
  for (const char* w : {"play", "the", "music", "</s>"}) {
    uint32_t id = 0;
    REQUIRE(wf_vocab_id(v, w, &id) == WF_OK);
    REQUIRE(wf_model_next_log_probs(m, "en_US", "assistant", ids.data(), ids.size(), lp.data(),
                                    V) == WF_OK);
    chain -= lp[id];
    ids.push_back(id);
  }
  CHECK(std::abs(nll - chain) <= 1e-9 * std::abs(chain));

  char* fp = nullptr;
  REQUIRE(wf_vocab_fingerprint(v, &fp) == WF_OK);
  CHECK(std::strlen(fp) == 16);
  wf_string_free(fp);

  char* text = nullptr;
  REQUIRE(wf_inspect(f.checkpoint().c_str(), &text) == WF_OK);
  CHECK(std::string(text).find("variant\tAD") != std::string::npos);
  wf_string_free(text);

  char* reports = nullptr;
  REQUIRE(wf_eval(f.run, f.checkpoint().c_str(), "ad", nullptr, &reports) == WF_OK);
  CHECK(std::string(reports).find("\"label\": \"ad\"") != std::string::npos);
  wf_string_free(reports);
  CHECK(wf_eval(f.run, nullptr, nullptr, nullptr, &reports) == WF_ERR_CONFIG);

  const std::string path = (f.dir / "out/reports/ad.json").string();
  const char* paths[] = {path.c_str()};
  char* table = nullptr;
  REQUIRE(wf_compare(paths, 1, nullptr, &table) == WF_OK);
  CHECK(std::string(table).rfind("label\tvariant", 0) == 0);
  wf_string_free(table);
  CHECK(wf_compare(nullptr, 0, nullptr, &table) == WF_ERR_CONFIG);

  wf_model_free(m);
  wf_vocab_free(v);
}

TEST_CASE("log sink receives progress") {
  std::vector<std::string> lines;
  wf_set_log([](const char* line, void* user) {
    static_cast<std::vector<std::string>*>(user)->push_back(line);
  }, &lines);
  {
    Fixture f;
  }
  wf_set_log(nullptr, nullptr);
  REQUIRE(lines.size() >= 3);
  CHECK(lines.front().rfind("generated", 0) == 0);
}
