/*
 * Copyright 2026 The effgan-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the federated GAN lab.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions return an effgan_status; on failure a human-readable message is
 * available from effgan_last_error() on the calling thread until the next
 * call that fails.
 *
 * String outputs follow one convention: the caller passes a buffer and its
 * capacity; the full length (excluding the terminator) is stored in *needed
 * when needed is non-NULL. If the buffer is too small the output is
 * truncated, still terminated, and EFFGAN_ERR_INVALID_ARGUMENT is returned.
 */

#ifndef EFFGAN_EFFGAN_H_
#define EFFGAN_EFFGAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EFFGAN_API __declspec(dllexport)
#else
#define EFFGAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum effgan_status {
  EFFGAN_OK = 0,
  EFFGAN_ERR_CONFIG = 1,           /* unknown key, bad value or violated invariant */
  EFFGAN_ERR_RUNTIME = 2,          /* any other failure */
  EFFGAN_ERR_INVALID_ARGUMENT = 3, /* NULL handle, bad size, precondition */
  EFFGAN_ERR_IO = 4,
  EFFGAN_ERR_DIVERGED = 5, /* non-finite loss or gradient */
  EFFGAN_ERR_FORMAT = 6    /* malformed IDX or ensemble files */
} effgan_status;

typedef struct effgan_config effgan_config;
typedef struct effgan_ensemble effgan_ensemble;

typedef struct effgan_run_summary {
  double best_fid;
  int32_t best_round;
  double final_fid;
  double final_mode_coverage;
  uint64_t bytes_total;
  uint64_t federation_bytes;
  uint64_t finetune_bytes;
  uint32_t evaluations; /* rows in metrics.csv */
  uint32_t warnings;
} effgan_run_summary;

EFFGAN_API const char* effgan_version(void);
EFFGAN_API const char* effgan_last_error(void);

/* A config starts with every default filled in. */
EFFGAN_API effgan_status effgan_config_create(effgan_config** out);
EFFGAN_API void effgan_config_destroy(effgan_config* config);
EFFGAN_API effgan_status effgan_config_clone(const effgan_config* config, effgan_config** out);

/* Applies a key = value file on top of the current values. */
EFFGAN_API effgan_status effgan_config_load_file(effgan_config* config, const char* path);
EFFGAN_API effgan_status effgan_config_set(effgan_config* config, const char* key, const char* value);
EFFGAN_API effgan_status effgan_config_get(const effgan_config* config, const char* key, char* buffer, size_t capacity,
                                           size_t* needed);
EFFGAN_API effgan_status effgan_config_to_string(const effgan_config* config, char* buffer, size_t capacity,
                                                 size_t* needed);
EFFGAN_API effgan_status effgan_config_validate(const effgan_config* config);

/* Canonical key names, index in [0, effgan_config_key_count()). */
EFFGAN_API size_t effgan_config_key_count(void);
EFFGAN_API const char* effgan_config_key_name(size_t index);

/* Runs config's method and writes its outputs under out_dir. A NULL out_dir
 * uses the config's output_dir resolved against EFFGAN_OUTPUT_ROOT. summary
 * may be NULL. */
EFFGAN_API effgan_status effgan_run_experiment(const effgan_config* config, const char* out_dir,
                                               effgan_run_summary* summary);

/* sweep looks like "E=1,5,10;n=1,2". Failed points are listed in summary.csv
 * and counted in *failed; the call itself succeeds unless the sweep is
 * malformed or summary.csv cannot be written. */
EFFGAN_API effgan_status effgan_run_grid(const effgan_config* config, const char* sweep, const char* out_dir, int jobs,
                                         size_t* points, size_t* failed);

/* Applies EFFGAN_OUTPUT_ROOT to a relative directory. */
EFFGAN_API effgan_status effgan_resolve_output_dir(const char* dir, char* buffer, size_t capacity, size_t* needed);

EFFGAN_API effgan_status effgan_ensemble_load(const char* dir, effgan_ensemble** out);
EFFGAN_API void effgan_ensemble_destroy(effgan_ensemble* ensemble);
EFFGAN_API size_t effgan_ensemble_member_count(const effgan_ensemble* ensemble);
EFFGAN_API size_t effgan_ensemble_data_dim(const effgan_ensemble* ensemble);
EFFGAN_API size_t effgan_ensemble_latent_dim(const effgan_ensemble* ensemble);

/* Writes count rows of data_dim doubles, row-major, into out (capacity in
 * doubles). member_ids may be NULL, otherwise receives the client id that
 * produced each row. */
EFFGAN_API effgan_status effgan_ensemble_sample(const effgan_ensemble* ensemble, size_t count, uint64_t seed, double* out,
                                                size_t capacity, int32_t* member_ids);

#ifdef __cplusplus
}
#endif

#endif /* EFFGAN_EFFGAN_H_ */
