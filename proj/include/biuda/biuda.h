// Copyright 2026 The BiUDA Authors
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

#ifndef BIUDA_BIUDA_H_
#define BIUDA_BIUDA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BIUDA_API __declspec(dllexport)
#else
#define BIUDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning biuda_status records a message
 * for biuda_last_error() on failure. Codes 2 and 3 double as CLI exit
 * codes. */
typedef enum biuda_status {
  BIUDA_OK = 0,
  BIUDA_ERR_ARGUMENT = 1,  /* null handle or out-of-range argument */
  BIUDA_ERR_CONFIG = 2,    /* invalid configuration or input data */
  BIUDA_ERR_NUMERICAL = 3, /* non-finite loss during training */
  BIUDA_ERR_IO = 4,        /* unreadable or unwritable file */
  BIUDA_ERR_REPORT = 5,    /* incomplete metrics for a report */
  BIUDA_ERR_INTERNAL = 6
} biuda_status;

typedef struct biuda_config biuda_config;
typedef struct biuda_dataset biuda_dataset;
typedef struct biuda_model biuda_model;

/* Message of the last failure on the calling thread; empty when none. */
BIUDA_API const char* biuda_last_error(void);
BIUDA_API const char* biuda_version(void);
/* Exit code convention: 0 success, 2 configuration/input error, 3
 * numerical failure. */
BIUDA_API int biuda_exit_code(biuda_status status);

/* ---- configuration -------------------------------------------------- */

BIUDA_API biuda_status biuda_config_new(biuda_config** out);
BIUDA_API void biuda_config_free(biuda_config* config);
/* Applies a JSON file of flat keys on top of the current values. */
BIUDA_API biuda_status biuda_config_load_file(biuda_config* config, const char* path);
/* Sets one key from its JSON text, e.g. ("seed", "3") or ("variant", "\"full\""). */
BIUDA_API biuda_status biuda_config_set_json(biuda_config* config, const char* key, const char* json_value);
/* Sets one key from plain text; strings need no quotes. */
BIUDA_API biuda_status biuda_config_set(biuda_config* config, const char* key, const char* text);
/* Copies the JSON text of one key (key == NULL: the whole object) into buf.
 * *needed receives the size including the terminator; buf may be NULL. */
BIUDA_API biuda_status biuda_config_get(const biuda_config* config, const char* key, char* buf, size_t size,
                                        size_t* needed);
BIUDA_API biuda_status biuda_config_validate(const biuda_config* config);
BIUDA_API biuda_status biuda_config_write(const biuda_config* config, const char* path);
/* Number of documented keys, and the name/help of key i. */
BIUDA_API size_t biuda_config_key_count(void);
BIUDA_API const char* biuda_config_key_name(size_t i);
BIUDA_API const char* biuda_config_key_help(size_t i);

/* ---- commands ------------------------------------------------------- */

BIUDA_API biuda_status biuda_run_synth(const biuda_config* config);
BIUDA_API biuda_status biuda_run_train(const biuda_config* config);
/* domain: 0, 1, or -1 for both bounds. */
BIUDA_API biuda_status biuda_run_train_upper(const biuda_config* config, int domain);
BIUDA_API biuda_status biuda_run_eval(const biuda_config* config);
BIUDA_API biuda_status biuda_run_report(const biuda_config* config);
BIUDA_API biuda_status biuda_run_repro(const biuda_config* config);

/* ---- datasets ------------------------------------------------------- */

BIUDA_API biuda_status biuda_dataset_load(const char* root, biuda_dataset** out);
BIUDA_API void biuda_dataset_free(biuda_dataset* dataset);
BIUDA_API biuda_status biuda_dataset_count(const biuda_dataset* dataset, int domain, size_t* count);
BIUDA_API biuda_status biuda_dataset_image_size(const biuda_dataset* dataset, int* size);
BIUDA_API biuda_status biuda_dataset_num_classes(const biuda_dataset* dataset, int* num_classes);
/* Copies sample `index` of a domain: size*size floats into image and, when
 * mask is non-NULL, size*size labels into mask. */
BIUDA_API biuda_status biuda_dataset_sample(const biuda_dataset* dataset, int domain, size_t index, float* image,
                                            uint8_t* mask, int* case_id, int* slice_id);

/* ---- inference ------------------------------------------------------ */

/* Loads E_c and S from a training or inference checkpoint. */
BIUDA_API biuda_status biuda_model_load(const char* checkpoint, biuda_model** out);
BIUDA_API void biuda_model_free(biuda_model* model);
BIUDA_API biuda_status biuda_model_info(const biuda_model* model, int* image_size, int* num_classes);
/* Segments one height*width image with intensities in [0,1]. */
BIUDA_API biuda_status biuda_model_infer(biuda_model* model, const float* image, int height, int width,
                                         uint8_t* labels);

#ifdef __cplusplus
}
#endif

#endif /* BIUDA_BIUDA_H_ */
