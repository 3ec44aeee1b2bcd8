/* Copyright 2026 The HierTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to the hiertag library. Every function that can fail returns
 * an ht_status; on failure ht_last_error() describes the problem for the
 * calling thread. Objects are opaque and owned by the caller once returned;
 * release them with the matching *_free function. */

#ifndef HIERTAG_HIERTAG_H_
#define HIERTAG_HIERTAG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(HIERTAG_BUILDING_LIBRARY)
#define HT_API __declspec(dllexport)
#else
#define HT_API __declspec(dllimport)
#endif
#else
#define HT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ht_status {
  HT_OK = 0,
  HT_ERR_INVALID_ARGUMENT = 1,
  HT_ERR_PARSE = 2,
  HT_ERR_VALIDATION = 3,
  HT_ERR_IO = 4,
  HT_ERR_CORRUPT = 5,
  HT_ERR_VERSION = 6,
  HT_ERR_RUNTIME = 7
} ht_status;

typedef enum ht_model_kind {
  HT_MODEL_HIER = 1,
  HT_MODEL_CONCAT = 2,
  HT_MODEL_INDEP = 3,
  HT_MODEL_MTL = 4
} ht_model_kind;

typedef enum ht_consolidation {
  HT_CONSOLIDATE_RANDOM = 0,
  HT_CONSOLIDATE_BEST_SCORE = 1,
  HT_CONSOLIDATE_MAX_MARGINAL = 2
} ht_consolidation;

typedef struct ht_hierarchy ht_hierarchy;
typedef struct ht_corpus ht_corpus;
typedef struct ht_models ht_models;

HT_API const char* ht_version(void);
HT_API const char* ht_status_string(ht_status status);
/* Message of the last failure on this thread; "" if none. */
HT_API const char* ht_last_error(void);
HT_API void ht_string_free(char* s);

/* Hierarchies */
HT_API ht_status ht_hierarchy_load(const char* path, ht_hierarchy** out);
HT_API ht_status ht_hierarchy_parse(const char* text, ht_hierarchy** out);
HT_API void ht_hierarchy_free(ht_hierarchy* h);
HT_API int ht_hierarchy_is_extended(const ht_hierarchy* h);
/* Adds the Other tags; the counts may be NULL. */
HT_API ht_status ht_hierarchy_extend(const ht_hierarchy* h, ht_hierarchy** out,
                                     size_t* added_nodes, size_t* added_edges);
HT_API ht_status ht_hierarchy_serialize(const ht_hierarchy* h, char** out);
HT_API ht_status ht_hierarchy_save(const ht_hierarchy* h, const char* path);

/* Corpora in the two-column format */
HT_API ht_status ht_corpus_load(const char* path, const char* tagset,
                                ht_corpus** out);
HT_API ht_status ht_corpus_save(const ht_corpus* c, const char* path);
HT_API void ht_corpus_free(ht_corpus* c);
HT_API size_t ht_corpus_token_count(const ht_corpus* c);
HT_API size_t ht_corpus_sequence_count(const ht_corpus* c);
HT_API const char* ht_corpus_tagset(const ht_corpus* c);

/* Training */
typedef struct ht_train_config {
  uint64_t seed;
  size_t max_epochs;
  size_t patience;
  double learning_rate;
  double l2;
  double clip_norm;
  size_t batch_size;
  size_t hidden_dim;
  int window;
  double tolerance;
} ht_train_config;

HT_API void ht_train_config_default(ht_train_config* cfg);

typedef struct ht_dataset {
  const ht_corpus* train;
  const ht_corpus* dev; /* may be NULL */
} ht_dataset;

/* `hierarchy` may be NULL for the baselines, which then use one flat tagset
 * per dataset; it is extended on the fly when not already extended. */
HT_API ht_status ht_train(ht_model_kind kind, const ht_dataset* datasets,
                          size_t count, const ht_hierarchy* hierarchy,
                          const ht_train_config* cfg, ht_models** out);
HT_API ht_status ht_models_load(const char* path, ht_models** out);
HT_API ht_status ht_models_save(const ht_models* m, const char* path);
/* Appends copies of src's models to dst. */
HT_API ht_status ht_models_append(ht_models* dst, const ht_models* src);
HT_API void ht_models_free(ht_models* m);
HT_API size_t ht_models_count(const ht_models* m);
HT_API ht_model_kind ht_models_kind(const ht_models* m, size_t index);
/* Tab-separated per-epoch loss and dev F1. */
HT_API ht_status ht_models_training_log(const ht_models* m, char** out);

/* Tagging. `collisions` and `consolidated` may be NULL. */
HT_API ht_status ht_tag(const ht_models* m, const ht_corpus* input,
                        const char* tagset, ht_consolidation method,
                        uint64_t seed, ht_corpus** out, size_t* collisions,
                        int* consolidated);

/* Evaluation */
typedef struct ht_prf {
  size_t tp;
  size_t fp;
  size_t fn;
  double precision;
  double recall;
  double f1;
  size_t token_count;
} ht_prf;

/* `table` receives a per-tag TSV rendering when not NULL. */
HT_API ht_status ht_eval(const ht_corpus* predicted, const ht_corpus* gold,
                         int span_matching, ht_prf* micro, char** table);

/* Experiments */
typedef void (*ht_log_fn)(const char* message, void* user);

/* Writes report.csv and report.md into out_dir. any_failed may be NULL. */
HT_API ht_status ht_experiment_run(const char* spec_path, const char* out_dir,
                                   size_t threads, ht_log_fn log, void* user,
                                   int* any_failed);

/* Data utilities */
HT_API ht_status ht_synth(const char* config_path, const char* out_path,
                          size_t* tokens);
/* `hierarchy` may be NULL; then only `tag` itself is moved. */
HT_API ht_status ht_selective(const ht_corpus* base, const ht_corpus* extending,
                              const char* tag, const ht_hierarchy* hierarchy,
                              ht_corpus** base_out, ht_corpus** extending_out);

#ifdef __cplusplus
}
#endif

#endif /* HIERTAG_HIERTAG_H_ */
