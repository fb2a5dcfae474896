// Copyright 2026 The nspm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the nspm toolkit. Every object is an opaque handle owned by
 * the caller and released with its _free function. Functions return a status
 * code; on failure nspm_last_error() and nspm_last_error_code() describe the
 * most recent error on the calling thread. Strings returned through char**
 * out-parameters are heap copies released with nspm_string_free(). */

#ifndef NSPM_NSPM_H_
#define NSPM_NSPM_H_

#include <stddef.h>

#if defined(_WIN32)
#define NSPM_API __declspec(dllexport)
#else
#define NSPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nspm_status {
  NSPM_OK = 0,
  NSPM_ERR_INVALID_ARGUMENT = 1,
  NSPM_ERR_IO = 2,
  NSPM_ERR_PARSE = 3,
  NSPM_ERR_DATA = 4,
  NSPM_ERR_MODEL = 5,
  NSPM_ERR_NUMERIC = 6,
  NSPM_ERR_INTERNAL = 7
} nspm_status;

typedef struct nspm_config nspm_config;
typedef struct nspm_catalog nspm_catalog;
typedef struct nspm_dataset nspm_dataset;
typedef struct nspm_model nspm_model;

/* Receives progress lines (without trailing newline). */
typedef void (*nspm_log_fn)(const char* line, void* user);

NSPM_API const char* nspm_version(void);
/* Message and module-qualified code ("kb.MalformedLine") of the last error;
 * empty strings when the last call succeeded. */
NSPM_API const char* nspm_last_error(void);
NSPM_API const char* nspm_last_error_code(void);
NSPM_API void nspm_string_free(char* s);

/* Configuration: flat key/value settings over built-in defaults. data_dir
 * locates the default triples and templates; NULL keeps them empty. */
NSPM_API nspm_status nspm_config_new(const char* data_dir, nspm_config** out);
NSPM_API nspm_status nspm_config_set(nspm_config* cfg, const char* key, const char* value);
NSPM_API nspm_status nspm_config_load_file(nspm_config* cfg, const char* path);
/* Current value of a key as text. */
NSPM_API nspm_status nspm_config_get(const nspm_config* cfg, const char* key, char** value);
NSPM_API void nspm_config_set_log(nspm_config* cfg, nspm_log_fn fn, void* user);
NSPM_API void nspm_config_free(nspm_config* cfg);

/* Knowledge-base catalog. */
NSPM_API nspm_status nspm_catalog_ingest(const nspm_config* cfg, nspm_catalog** out);
NSPM_API nspm_status nspm_catalog_read(const char* path, nspm_catalog** out);
NSPM_API nspm_status nspm_catalog_write(const nspm_catalog* cat, const char* path);
NSPM_API size_t nspm_catalog_size(const nspm_catalog* cat);
NSPM_API void nspm_catalog_free(nspm_catalog* cat);

/* Datasets. Partition names are "all", "train", "dev" and "test". */
NSPM_API nspm_status nspm_dataset_generate(const nspm_config* cfg, const nspm_catalog* cat,
                                           nspm_dataset** out);
NSPM_API nspm_status nspm_dataset_split(nspm_dataset* ds, const nspm_config* cfg);
NSPM_API nspm_status nspm_dataset_read(const char* dir, nspm_dataset** out);
NSPM_API nspm_status nspm_dataset_write(const nspm_dataset* ds, const char* dir);
NSPM_API nspm_status nspm_dataset_partition_size(const nspm_dataset* ds, const char* name,
                                                 size_t* out);
NSPM_API void nspm_dataset_free(nspm_dataset* ds);

/* Models. curve_csv may be NULL. */
NSPM_API nspm_status nspm_model_train(const nspm_dataset* ds, const nspm_config* cfg,
                                      nspm_model** out, char** curve_csv);
NSPM_API nspm_status nspm_model_save(const nspm_model* model, const char* path);
NSPM_API nspm_status nspm_model_load(const char* path, nspm_model** out);
/* Translates one question. Any of the out-parameters may be NULL. Without
 * repair the raw sequence must decode as is; with repair the interpreter
 * fixes it first and report_json describes the repair. */
NSPM_API nspm_status nspm_model_translate(const nspm_model* model, const char* question,
                                          int repair, char** sparql, char** tokens,
                                          char** report_json);
NSPM_API nspm_status nspm_model_evaluate(const nspm_model* model, const nspm_dataset* ds,
                                         const char* partition, char** report_json,
                                         double* bleu, double* accuracy);
NSPM_API void nspm_model_free(nspm_model* model);

/* Whole pipeline into the configured output directory; summary_json may be
 * NULL. */
NSPM_API nspm_status nspm_pipeline_run(const nspm_config* cfg, char** summary_json);
/* presets: comma-separated preset ids, at least two. */
NSPM_API nspm_status nspm_ablation_run(const nspm_config* cfg, const char* presets,
                                       char** table);

/* Codec and interpreter on single strings; token sequences are
 * space-separated. */
NSPM_API nspm_status nspm_encode_query(const char* sparql, const char* preset, char** tokens);
NSPM_API nspm_status nspm_decode_sequence(const char* tokens, const char* preset,
                                          char** sparql);
NSPM_API nspm_status nspm_interpret(const char* tokens, const char* preset, char** sparql,
                                    char** report_json);

#ifdef __cplusplus
}
#endif

#endif  /* NSPM_NSPM_H_ */
