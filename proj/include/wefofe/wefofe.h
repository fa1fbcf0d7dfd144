/* Copyright 2026 The wefofe Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to the wefofe FOFE language-model toolkit.
 *
 * Every function returns a wf_status. On failure the message of the most
 * recent error on the calling thread is available from wf_last_error().
 * Handles are opaque and owned by the caller, who releases them with the
 * matching *_free function. Strings returned through char** are allocated
 * by the library and released with wf_string_free(). */

#ifndef WEFOFE_WEFOFE_H_
#define WEFOFE_WEFOFE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WF_API __declspec(dllexport)
#elif defined(__GNUC__)
#define WF_API __attribute__((visibility("default")))
#else
#define WF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wf_status {
  WF_OK = 0,
  WF_ERR_CONFIG = 1,     /* invalid configuration or usage */
  WF_ERR_DATA = 2,       /* malformed or insufficient data */
  WF_ERR_DIMENSION = 3,  /* shape mismatch */
  WF_ERR_INDEX = 4,      /* id out of range */
  WF_ERR_ROUTING = 5,    /* unknown dialect or application */
  WF_ERR_COMPARISON = 6, /* vocabulary fingerprints disagree */
  WF_ERR_NUMERIC = 7,    /* non-finite value */
  WF_ERR_IO = 8,         /* file system failure */
  WF_ERR_INTERNAL = 9,   /* bug or unexpected exception */
  WF_ERR_ARGUMENT = 10   /* null or invalid argument to this API */
} wf_status;

typedef struct wf_run wf_run;
typedef struct wf_model wf_model;
typedef struct wf_vocab wf_vocab;

typedef void (*wf_log_fn)(const char* line, void* user);

WF_API const char* wf_version(void);
WF_API const char* wf_status_name(wf_status status);
/* Message of the last failure on this thread; "" if none. */
WF_API const char* wf_last_error(void);
WF_API void wf_string_free(char* s);
/* Progress lines from long-running commands; NULL disables. Process-wide. */
WF_API void wf_set_log(wf_log_fn fn, void* user);

/* Run configuration (INI document). */
WF_API wf_status wf_run_load(const char* config_path, wf_run** out);
WF_API wf_status wf_run_parse(const char* text, const char* base_dir, wf_run** out);
WF_API wf_status wf_run_set_output_dir(wf_run* run, const char* dir);
WF_API wf_status wf_run_output_dir(const wf_run* run, char** out);
WF_API void wf_run_free(wf_run* run);

/* Experiment commands. Optional arguments may be NULL. */
WF_API wf_status wf_generate(const wf_run* run);
WF_API wf_status wf_build_vocab(const wf_run* run);
WF_API wf_status wf_train(const wf_run* run, int resume);
WF_API wf_status wf_adapt(const wf_run* run, const char* dialect, int resume);
/* Evaluates `checkpoint` (or every configured checkpoint when NULL) and
 * returns the reports as a JSON array. */
WF_API wf_status wf_eval(const wf_run* run, const char* checkpoint, const char* label,
                         const char* testset, char** reports_json);
/* runs == 0 uses the configured count. */
WF_API wf_status wf_bench(const wf_run* run, const char* checkpoint, const char* label,
                          size_t runs, char** latency_json);
WF_API wf_status wf_inspect(const char* checkpoint, char** text);
WF_API wf_status wf_compare(const char* const* reports, size_t count, const char* out_path,
                            char** table);

/* Models. */
WF_API wf_status wf_model_load(const char* checkpoint, wf_model** out);
WF_API void wf_model_free(wf_model* model);
WF_API wf_status wf_model_total_params(const wf_model* model, size_t* out);
WF_API wf_status wf_model_active_params(const wf_model* model, const char* dialect,
                                        const char* application, size_t* out);
WF_API wf_status wf_model_vocab_size(const wf_model* model, size_t* out);
/* Log-probabilities of the next word after `history` (ids), written to
 * `out` which must hold vocab_size values. */
WF_API wf_status wf_model_next_log_probs(const wf_model* model, const char* dialect,
                                         const char* application, const uint32_t* history,
                                         size_t length, double* out, size_t out_size);
/* Total negative log-likelihood of a sentence (boundary framed) and the
 * number of predicted tokens. */
WF_API wf_status wf_model_score(const wf_model* model, const wf_vocab* vocab, const char* dialect,
                                const char* application, const char* sentence, double* nll,
                                size_t* tokens);

/* Vocabularies. */
WF_API wf_status wf_vocab_load(const char* path, wf_vocab** out);
WF_API void wf_vocab_free(wf_vocab* vocab);
WF_API wf_status wf_vocab_size(const wf_vocab* vocab, size_t* out);
WF_API wf_status wf_vocab_id(const wf_vocab* vocab, const char* word, uint32_t* out);
WF_API wf_status wf_vocab_fingerprint(const wf_vocab* vocab, char** out);

#ifdef __cplusplus
}
#endif

#endif /* WEFOFE_WEFOFE_H_ */
