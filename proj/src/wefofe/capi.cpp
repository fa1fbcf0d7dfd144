// Copyright 2026 The wefofe Authors
// SPDX-License-Identifier: Apache-2.0

#include "wefofe/wefofe.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <string>

#include "wefofe/checkpoint.hpp"
#include "wefofe/commands.hpp"
#include "wefofe/error.hpp"

struct wf_run {
  wefofe::RunConfig config;
};

struct wf_model {
  wefofe::LoadedCheckpoint ck;
};

struct wf_vocab {
  wefofe::Vocabulary vocab;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
wf_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

wefofe::LogSink sink() {
  return [](const std::string& line) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
  };
}

wf_status status_of(wefofe::ErrorKind kind) {
  return static_cast<wf_status>(static_cast<int>(kind) + 1);
}

template <class F>
wf_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return WF_OK;
  } catch (const wefofe::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WF_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return WF_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return WF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error: unknown exception";
    return WF_ERR_INTERNAL;
  }
}

// Argument errors have their own status; they are raised before any work.
#define WF_REQUIRE(cond, what)           \
  do {                                   \
    if (!(cond)) {                       \
      g_last_error = (what);             \
      return WF_ERR_ARGUMENT;            \
    }                                    \
  } while (0)

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::optional<std::string> opt(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::string(s);
}

}  // namespace

extern "C" {

const char* wf_version(void) { return "0.1.0"; }

const char* wf_status_name(wf_status status) {
  switch (status) {
    case WF_OK: return "ok";
    case WF_ERR_ARGUMENT: return "argument";
    default:
      if (status > WF_OK && status <= WF_ERR_INTERNAL)
        return wefofe::to_string(static_cast<wefofe::ErrorKind>(status - 1));
      return "unknown";
  }
}

const char* wf_last_error(void) { return g_last_error.c_str(); }

void wf_string_free(char* s) { std::free(s); }

void wf_set_log(wf_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

wf_status wf_run_load(const char* config_path, wf_run** out) {
  WF_REQUIRE(config_path && out, "wf_run_load: null argument");
  return guarded([&] { *out = new wf_run{wefofe::RunConfig::load(config_path)}; });
}

wf_status wf_run_parse(const char* text, const char* base_dir, wf_run** out) {
  WF_REQUIRE(text && out, "wf_run_parse: null argument");
  return guarded([&] {
    *out = new wf_run{wefofe::RunConfig::parse(text, base_dir ? base_dir : ".")};
  });
}

wf_status wf_run_set_output_dir(wf_run* run, const char* dir) {
  WF_REQUIRE(run && dir && *dir, "wf_run_set_output_dir: null or empty argument");
  return guarded([&] { run->config.output_dir = dir; });
}

wf_status wf_run_output_dir(const wf_run* run, char** out) {
  WF_REQUIRE(run && out, "wf_run_output_dir: null argument");
  return guarded([&] { *out = dup_string(run->config.output_dir.string()); });
}

void wf_run_free(wf_run* run) { delete run; }

wf_status wf_generate(const wf_run* run) {
  WF_REQUIRE(run, "wf_generate: null run");
  return guarded([&] { wefofe::cmd_generate(run->config, sink()); });
}

wf_status wf_build_vocab(const wf_run* run) {
  WF_REQUIRE(run, "wf_build_vocab: null run");
  return guarded([&] { wefofe::cmd_build_vocab(run->config, sink()); });
}

wf_status wf_train(const wf_run* run, int resume) {
  WF_REQUIRE(run, "wf_train: null run");
  return guarded([&] { wefofe::cmd_train(run->config, resume != 0, sink()); });
}

wf_status wf_adapt(const wf_run* run, const char* dialect, int resume) {
  WF_REQUIRE(run, "wf_adapt: null run");
  return guarded([&] { wefofe::cmd_adapt(run->config, opt(dialect), resume != 0, sink()); });
}

wf_status wf_eval(const wf_run* run, const char* checkpoint, const char* label,
                  const char* testset, char** reports_json) {
  WF_REQUIRE(run && reports_json, "wf_eval: null argument");
  return guarded([&] {
    const auto ck = opt(checkpoint);
    const auto test = opt(testset);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : wefofe::eval_targets(
             run->config, ck ? std::optional<std::filesystem::path>(*ck) : std::nullopt,
             opt(label)))
      arr.push_back(wefofe::cmd_eval(run->config, t,
                                     test ? std::optional<std::filesystem::path>(*test)
                                          : std::nullopt,
                                     sink())
                        .to_json());
    *reports_json = dup_string(arr.dump(2) + "\n");
  });
}

wf_status wf_bench(const wf_run* run, const char* checkpoint, const char* label, size_t runs,
                   char** latency_json) {
  WF_REQUIRE(run && latency_json, "wf_bench: null argument");
  return guarded([&] {
    const auto ck = opt(checkpoint);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : wefofe::eval_targets(
             run->config, ck ? std::optional<std::filesystem::path>(*ck) : std::nullopt,
             opt(label)))
      arr.push_back(wefofe::cmd_bench(run->config, t,
                                      runs ? std::optional<size_t>(runs) : std::nullopt, sink()));
    *latency_json = dup_string(arr.dump(2) + "\n");
  });
}

wf_status wf_inspect(const char* checkpoint, char** text) {
  WF_REQUIRE(checkpoint && text, "wf_inspect: null argument");
  return guarded([&] { *text = dup_string(wefofe::cmd_inspect(checkpoint)); });
}

wf_status wf_compare(const char* const* reports, size_t count, const char* out_path,
                     char** table) {
  WF_REQUIRE((reports || count == 0) && table, "wf_compare: null argument");
  for (size_t i = 0; i < count; ++i) WF_REQUIRE(reports[i], "wf_compare: null report path");
  return guarded([&] {
    std::vector<std::filesystem::path> paths(reports, reports + count);
    const auto out = opt(out_path);
    *table = dup_string(wefofe::cmd_compare(
        paths, out ? std::optional<std::filesystem::path>(*out) : std::nullopt));
  });
}

wf_status wf_model_load(const char* checkpoint, wf_model** out) {
  WF_REQUIRE(checkpoint && out, "wf_model_load: null argument");
  return guarded([&] { *out = new wf_model{wefofe::load_checkpoint(checkpoint)}; });
}

void wf_model_free(wf_model* model) { delete model; }

wf_status wf_model_total_params(const wf_model* model, size_t* out) {
  WF_REQUIRE(model && out, "wf_model_total_params: null argument");
  return guarded([&] { *out = model->ck.model.total_params(); });
}

wf_status wf_model_active_params(const wf_model* model, const char* dialect,
                                 const char* application, size_t* out) {
  WF_REQUIRE(model && dialect && application && out, "wf_model_active_params: null argument");
  return guarded([&] {
    const auto& m = model->ck.model;
    *out = m.active_params(wefofe::make_key(m.config(), dialect, application));
  });
}

wf_status wf_model_vocab_size(const wf_model* model, size_t* out) {
  WF_REQUIRE(model && out, "wf_model_vocab_size: null argument");
  return guarded([&] { *out = model->ck.model.config().vocab_size; });
}

wf_status wf_model_next_log_probs(const wf_model* model, const char* dialect,
                                  const char* application, const uint32_t* history,
                                  size_t length, double* out, size_t out_size) {
  WF_REQUIRE(model && dialect && application && out, "wf_model_next_log_probs: null argument");
  WF_REQUIRE(history || length == 0, "wf_model_next_log_probs: null history");
  return guarded([&] {
    const auto& m = model->ck.model;
    const size_t V = m.config().vocab_size;
    wefofe::require(out_size == V, wefofe::ErrorKind::Dimension,
                    "output buffer holds " + std::to_string(out_size) + " values, need " +
                        std::to_string(V));
    const auto key = wefofe::make_key(m.config(), dialect, application);
    std::vector<std::vector<wefofe::TokenId>> hs(1);
    for (size_t i = 0; i < length; ++i) {
      wefofe::require(history[i] < V, wefofe::ErrorKind::Index,
                      "history id " + std::to_string(history[i]) + " is outside the vocabulary");
      hs[0].push_back(history[i]);
    }
    wefofe::NoGradGuard ng;
    const wefofe::Tensor out_logits = m.forward(hs, key);
    const auto logits = out_logits.values();
    double mx = -INFINITY;
    for (double x : logits) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : logits) z += std::exp(x - mx);
    const double lz = mx + std::log(z);
    for (size_t i = 0; i < V; ++i) out[i] = logits[i] - lz;
  });
}

wf_status wf_model_score(const wf_model* model, const wf_vocab* vocab, const char* dialect,
                         const char* application, const char* sentence, double* nll,
                         size_t* tokens) {
  WF_REQUIRE(model && vocab && dialect && application && sentence && nll && tokens,
             "wf_model_score: null argument");
  return guarded([&] {
    const auto& m = model->ck.model;
    wefofe::require(vocab->vocab.size() == m.config().vocab_size,
                    wefofe::ErrorKind::Comparison,
                    "vocabulary size does not match the model");
    const auto key = wefofe::make_key(m.config(), dialect, application);
    const auto ids = vocab->vocab.tokenize(sentence);
    std::vector<std::vector<wefofe::TokenId>> hs;
    std::vector<size_t> targets;
    for (size_t t = 1; t < ids.size(); ++t) {
      hs.emplace_back(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(t));
      targets.push_back(ids[t]);
    }
    wefofe::NoGradGuard ng;
    double total = 0.0;
    for (double x : wefofe::row_nll(m.forward(hs, key), targets)) total += x;
    *nll = total;
    *tokens = targets.size();
  });
}

wf_status wf_vocab_load(const char* path, wf_vocab** out) {
  WF_REQUIRE(path && out, "wf_vocab_load: null argument");
  return guarded([&] { *out = new wf_vocab{wefofe::Vocabulary::load(path)}; });
}

void wf_vocab_free(wf_vocab* vocab) { delete vocab; }

wf_status wf_vocab_size(const wf_vocab* vocab, size_t* out) {
  WF_REQUIRE(vocab && out, "wf_vocab_size: null argument");
  return guarded([&] { *out = vocab->vocab.size(); });
}

wf_status wf_vocab_id(const wf_vocab* vocab, const char* word, uint32_t* out) {
  WF_REQUIRE(vocab && word && out, "wf_vocab_id: null argument");
  return guarded([&] { *out = static_cast<uint32_t>(vocab->vocab.id_of(word)); });
}

wf_status wf_vocab_fingerprint(const wf_vocab* vocab, char** out) {
  WF_REQUIRE(vocab && out, "wf_vocab_fingerprint: null argument");
  return guarded([&] { *out = dup_string(vocab->vocab.fingerprint()); });
}

}  // extern "C"
