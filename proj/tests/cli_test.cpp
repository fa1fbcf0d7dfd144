// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "wefofe/checkpoint.hpp"
#include "wefofe/container.hpp"
#include "wefofe/vocab.hpp"

namespace fs = std::filesystem;
using namespace wefofe;

namespace {

struct Result {
  int code = -1;
  std::string err;
  std::string out;
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wefofe_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Result run_cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" + WEFOFE_CLI + "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file_bytes(out);
  r.err = read_file_bytes(err);
  return r;
}

void write(const fs::path& p, const std::string& text) { write_file_bytes(p, text); }

std::string tiny_config(const std::string& variant = "MIXTURE", const std::string& extra = "") {
  return "seed = 4\n"
         "output_dir = out\n"
         "[corpus]\nvocab_size = 100\n"
         "[generator]\ngrammar_size = 15\nsentences_per_dialect = 120\n"
         "[model]\nvariant = " + variant + "\nd = 8\nN = 3\nL = 1\nk = 3\n"
         "[train]\nepochs = 1\nbatch_size = 16\nlearning_rate = 0.01\n"
         "[adapt]\nepochs = 1\nbatch_size = 16\nlearning_rate = 0.01\n"
         "[eval]\ncheckpoints = base:train/best adapted:adapt/final\n"
         "[bench]\nqueries = 20\n" + extra;
}

// Runs generate, build-vocab and train; returns the run directory.
fs::path trained(const std::string& name, const std::string& variant = "MIXTURE") {
  const auto dir = scratch(name);
  write(dir / "run.cfg", tiny_config(variant));
  for (const char* cmd : {"generate", "build-vocab", "train"})
    REQUIRE(run_cli(dir, std::string(cmd) + " run.cfg").code == 0);
  return dir;
}

}  // namespace

TEST_CASE("usage and configuration errors exit 1") {
  const auto dir = scratch("usage");
  CHECK(run_cli(dir, "").code == 1);
  CHECK(run_cli(dir, "frobnicate").code == 1);
  CHECK(run_cli(dir, "--help").code == 0);
  CHECK(run_cli(dir, "train missing.cfg").code == 1);

  write(dir / "noseed.cfg", "[model]\nd = 8\n");
  auto r = run_cli(dir, "generate noseed.cfg");
  CHECK(r.code == 1);
  CHECK(r.err.find("seed") != std::string::npos);

  write(dir / "typo.cfg", "seed = 1\n[train]\nepoch = 3\n");
  r = run_cli(dir, "generate typo.cfg");
  CHECK(r.code == 1);
  CHECK(r.err.find("train.epoch") != std::string::npos);

  write(dir / "bad.cfg", "seed = 1\n[model]\nd = eight\n");
  r = run_cli(dir, "generate bad.cfg");
  CHECK(r.code == 1);
  CHECK(r.err.find("model.d") != std::string::npos);
}

TEST_CASE("generate") {
  const auto dir = scratch("generate");
  write(dir / "bad.cfg", "seed = 1\n[generator]\ndivergence = 2.0\n");
  const auto bad = run_cli(dir, "generate bad.cfg");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("divergence") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  write(dir / "run.cfg", tiny_config());
  REQUIRE(run_cli(dir, "generate run.cfg").code == 0);
  for (const char* f : {"train.tsv", "dev.tsv", "test.tsv", "ground_truth.tsv"})
    CHECK(fs::file_size(dir / "out/data" / f) > 0);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(dir / "out/data"))
    first[e.path().filename().string()] = read_file_bytes(e.path());
  REQUIRE(run_cli(dir, "generate run.cfg", "WEFOFE_OUT_DIR=again").code == 0);
  for (const auto& [name, bytes] : first) CHECK(read_file_bytes(dir / "again/data" / name) == bytes);
}

TEST_CASE("train refuses a missing corpus before training") {
  const auto dir = scratch("missing");
  std::string cfg = tiny_config();
  cfg.insert(cfg.find("vocab_size"), "train = nowhere.tsv\n");
  write(dir / "run.cfg", cfg);
  const auto r = run_cli(dir, "train run.cfg");
  CHECK(r.code != 0);
  CHECK(r.err.find("nowhere.tsv") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out/train"));
}

TEST_CASE("adapt without a base checkpoint is a config error") {
  const auto dir = scratch("nobase");
  write(dir / "run.cfg", tiny_config());
  REQUIRE(run_cli(dir, "generate run.cfg").code == 0);
  REQUIRE(run_cli(dir, "build-vocab run.cfg").code == 0);
  const auto r = run_cli(dir, "adapt run.cfg");
  CHECK(r.code == 1);
  CHECK(r.err.find("base checkpoint") != std::string::npos);

  std::string ft = tiny_config();
  ft.replace(ft.find("[adapt]\n"), 8, "[adapt]\nstrategy = FT_A\n");
  write(dir / "ft.cfg", ft);
  REQUIRE(run_cli(dir, "train ft.cfg").code == 0);
  const auto f = run_cli(dir, "adapt ft.cfg");
  CHECK(f.code == 1);
  CHECK(f.err.find("FT_A") != std::string::npos);
}

TEST_CASE("BASE then RI_A pipeline keeps the base frozen") {
  const auto dir = trained("pipeline");
  REQUIRE(run_cli(dir, "adapt run.cfg").code == 0);
  const auto base = load_checkpoint(dir / "out/train/best");
  const auto adapted = load_checkpoint(dir / "out/adapt/final");
  CHECK(to_string(adapted.model.config().variant) == "MIXTURE_A");
  for (const auto& g : base.model.groups()) {
    const auto& other = adapted.model.groups()[*adapted.model.find_group(g.name)];
    for (size_t i = 0; i < g.tensors.size(); ++i) {
      const auto a = g.tensors[i].values(), b = other.tensors[i].values();
      CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
  }
  CHECK(adapted.meta.lineage.size() == 4);

  const auto single = run_cli(dir, "adapt run.cfg --dialect en_GB");
  CHECK(single.code == 0);
  CHECK(fs::exists(dir / "out/adapt/en_GB/best/manifest.json"));
  CHECK(run_cli(dir, "adapt run.cfg --dialect en_AU").code == 1);

  const auto ev = run_cli(dir, "eval run.cfg");
  CHECK(ev.code == 0);
  CHECK(fs::exists(dir / "out/reports/base.json"));
  CHECK(fs::exists(dir / "out/reports/adapted.json"));
  const auto cmp = run_cli(dir, "compare out/reports/base.json out/reports/adapted.json --out t.tsv");
  CHECK(cmp.code == 0);
  CHECK(cmp.out.rfind("label\tvariant", 0) == 0);
  CHECK(read_file_bytes(dir / "t.tsv") == cmp.out);
}

TEST_CASE("inspect lists the AD sub-networks") {
  const auto dir = trained("inspect", "AD");
  const auto r = run_cli(dir, "inspect out/train/best");
  REQUIRE(r.code == 0);
  size_t subnets = 0, pos = 0;
  while ((pos = r.out.find("\tsubnetwork\t", pos)) != std::string::npos) {
    ++subnets;
    ++pos;
  }
  CHECK(subnets == 6);
  CHECK(r.out.find("variant\tAD\n") != std::string::npos);
  CHECK(run_cli(dir, "inspect out/nothing").code == 1);
}

TEST_CASE("eval and bench") {
  const auto dir = trained("eval");
  write(dir / "empty.tsv", "");
  const auto empty = run_cli(dir, "eval run.cfg --checkpoint out/train/best --test empty.tsv");
  CHECK(empty.code == 2);

  const auto b = run_cli(dir, "bench run.cfg --checkpoint out/train/best --label base");
  REQUIRE(b.code == 0);
  const auto j = nlohmann::json::parse(read_file_bytes(dir / "out/reports/base.latency.json"));
  CHECK(j["runs"] == 3);
  CHECK(j["metric"] == "LM forward latency");
  CHECK(j["entries"].size() == 6);
  for (const auto& e : j["entries"]) {
    CHECK(e["stats"]["runs"] == 3);
    CHECK(e["stats"]["per_run"].size() == 3);
  }
  REQUIRE(run_cli(dir, "bench run.cfg --checkpoint out/train/best --label two --runs 2").code == 0);
  const auto two = nlohmann::json::parse(read_file_bytes(dir / "out/reports/two.latency.json"));
  CHECK(two["runs"] == 2);

  REQUIRE(run_cli(dir, "eval run.cfg --checkpoint out/train/best --label base").code == 0);
  const auto cmp = run_cli(dir, "compare out/reports/base.json");
  CHECK(cmp.code == 0);
  CHECK(cmp.out.find("latency_p95_ms") != std::string::npos);
}

TEST_CASE("vocabulary mismatches are comparison errors") {
  const auto dir = trained("mismatch");
  REQUIRE(run_cli(dir, "eval run.cfg --checkpoint out/train/best --label a").code == 0);
  const Vocabulary other({"lorry", "truck"});
  other.save(dir / "out/vocab.txt");
  const auto r = run_cli(dir, "eval run.cfg --checkpoint out/train/best --label b");
  CHECK(r.code == 2);
  CHECK(r.err.find("comparison") != std::string::npos);

  auto report = nlohmann::ordered_json::parse(read_file_bytes(dir / "out/reports/a.json"));
  report["label"] = "c";
  report["vocab_fingerprint"] = "0000000000000000";
  write(dir / "out/reports/c.json", report.dump(2));
  const auto c = run_cli(dir, "compare out/reports/a.json out/reports/c.json");
  CHECK(c.code == 2);
  CHECK(c.err.find("comparison") != std::string::npos);
}

TEST_CASE("training reruns are byte-identical and resume is a no-op when done") {
  const auto dir = trained("rerun");
  const auto first = read_file_bytes(dir / "out/train/best/model.tensors");
  REQUIRE(run_cli(dir, "train run.cfg").code == 0);
  CHECK(read_file_bytes(dir / "out/train/best/model.tensors") == first);
  REQUIRE(run_cli(dir, "train run.cfg --resume").code == 0);
  CHECK(read_file_bytes(dir / "out/train/best/model.tensors") == first);

  std::string changed = tiny_config();
  changed.replace(changed.find("epochs = 1"), 10, "epochs = 2");
  write(dir / "changed.cfg", changed);
  CHECK(run_cli(dir, "train changed.cfg --resume").code == 1);
}
