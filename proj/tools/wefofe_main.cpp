// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

// wefofe: command-line driver over the C API.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error
// (including I/O and vocabulary mismatches), 3 internal error.
// WEFOFE_OUT_DIR, when set, replaces the config's output_dir.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "wefofe/wefofe.h"

namespace {

int exit_code(wf_status s) {
  switch (s) {
    case WF_OK: return 0;
    case WF_ERR_CONFIG:
    case WF_ERR_ROUTING:
    case WF_ERR_ARGUMENT: return 1;
    case WF_ERR_DATA:
    case WF_ERR_COMPARISON:
    case WF_ERR_IO: return 2;
    default: return 3;
  }
}

int report(wf_status s) {
  if (s != WF_OK) std::fprintf(stderr, "wefofe: %s error: %s\n", wf_status_name(s), wf_last_error());
  return exit_code(s);
}

void print_and_free(char* s) {
  std::fputs(s, stdout);
  wf_string_free(s);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct Run {
  wf_run* run = nullptr;
  ~Run() { wf_run_free(run); }
};

wf_status load(const std::string& path, Run& r) {
  wf_status s = wf_run_load(path.c_str(), &r.run);
  if (s != WF_OK) return s;
  if (const char* dir = std::getenv("WEFOFE_OUT_DIR"); dir && *dir)
    s = wf_run_set_output_dir(r.run, dir);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FOFE multi-dialect language-model toolkit"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress lines");

  std::string config, checkpoint, label, testset, dialect, out;
  std::vector<std::string> reports;
  bool resume = false;
  size_t runs = 0;

  auto* gen = app.add_subcommand("generate", "Write the synthetic corpus splits and ground truth");
  auto* voc = app.add_subcommand("build-vocab", "Build the vocabulary from the training split");
  auto* tr = app.add_subcommand("train", "Train the base model (BASE or PT_A)");
  auto* ad = app.add_subcommand("adapt", "Train dialect adapters (RI_A or FT_A)");
  auto* ev = app.add_subcommand("eval", "Perplexity report per dialect and application");
  auto* be = app.add_subcommand("bench", "LM forward latency per routing key");
  auto* in = app.add_subcommand("inspect", "List a checkpoint's parameter groups");
  auto* cmp = app.add_subcommand("compare", "Tabulate evaluation reports");

  for (auto* c : {gen, voc, tr, ad, ev, be})
    c->add_option("config", config, "Run configuration (INI)")->required()->check(CLI::ExistingFile);
  for (auto* c : {tr, ad}) c->add_flag("--resume", resume, "Continue from the saved train state");
  ad->add_option("--dialect", dialect, "Adapt only this dialect");
  for (auto* c : {ev, be}) {
    c->add_option("--checkpoint", checkpoint, "Checkpoint directory (default: eval.checkpoints)");
    c->add_option("--label", label, "Report label for --checkpoint");
  }
  ev->add_option("--test", testset, "Tagged corpus to evaluate (default: the test split)");
  be->add_option("--runs", runs, "Repetitions (default: bench.runs)")->check(CLI::PositiveNumber);
  in->add_option("checkpoint", checkpoint, "Checkpoint directory")->required();
  cmp->add_option("reports", reports, "Report files")->required();
  cmp->add_option("--out", out, "Also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (!quiet)
    wf_set_log([](const char* line, void*) { std::fprintf(stderr, "%s\n", line); }, nullptr);

  if (*in) {
    char* text = nullptr;
    const wf_status s = wf_inspect(checkpoint.c_str(), &text);
    if (s == WF_OK) print_and_free(text);
    return report(s);
  }
  if (*cmp) {
    std::vector<const char*> paths;
    for (const auto& r : reports) paths.push_back(r.c_str());
    char* table = nullptr;
    const wf_status s = wf_compare(paths.data(), paths.size(), opt(out), &table);
    if (s == WF_OK) print_and_free(table);
    return report(s);
  }

  Run r;
  wf_status s = load(config, r);
  if (s != WF_OK) return report(s);
  char* text = nullptr;
  if (*gen) {
    s = wf_generate(r.run);
  } else if (*voc) {
    s = wf_build_vocab(r.run);
  } else if (*tr) {
    s = wf_train(r.run, resume ? 1 : 0);
  } else if (*ad) {
    s = wf_adapt(r.run, opt(dialect), resume ? 1 : 0);
  } else if (*ev) {
    s = wf_eval(r.run, opt(checkpoint), opt(label), opt(testset), &text);
  } else if (*be) {
    s = wf_bench(r.run, opt(checkpoint), opt(label), runs, &text);
  }
  if (s == WF_OK && text) print_and_free(text);
  return report(s);
}
