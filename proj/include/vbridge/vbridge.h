/* vbridge - variational bridge models for time-coarsened stochastic dynamics
 * Copyright 2026 The vbridge Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef VBRIDGE_VBRIDGE_H
#define VBRIDGE_VBRIDGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VB_API __declspec(dllexport)
#else
#define VB_API __attribute__((visibility("default")))
#endif

/* Status codes. Every call returns one; on failure a message is available
 * from vb_last_error() on the same thread until the next call. */
typedef enum vb_status {
  VB_OK = 0,
  VB_ERR_INVALID_ARGUMENT = 1,
  VB_ERR_CONFIG = 2,
  VB_ERR_DATA = 3,
  VB_ERR_NUMERICAL = 4,
  VB_ERR_SHAPE = 5,
  VB_ERR_DOMAIN = 6,
  VB_ERR_PIPELINE = 7,
  VB_ERR_INTERNAL = 8
} vb_status;

typedef struct vb_config vb_config;
typedef struct vb_checkpoint vb_checkpoint;

/* Receives progress lines (NUL-terminated) during long commands. */
typedef void (*vb_progress_fn)(const char* line, void* user);

VB_API const char* vb_version(void);
VB_API const char* vb_last_error(void);
VB_API const char* vb_status_name(vb_status status);

/* Process exit code for a status: 0 ok, 2 config, 3 data/shape/domain/pipeline,
 * 4 numerical, 1 otherwise. */
VB_API int vb_exit_code(vb_status status);

/* Strings returned through char** out-parameters are owned by the caller. */
VB_API void vb_string_free(char* s);

VB_API vb_status vb_config_default(vb_config** out);
VB_API vb_status vb_config_load(const char* path, vb_config** out);
VB_API vb_status vb_config_parse(const char* json_text, vb_config** out);
VB_API vb_status vb_config_save(const vb_config* cfg, const char* path);
VB_API vb_status vb_config_to_json(const vb_config* cfg, char** out);
VB_API vb_status vb_config_hash(const vb_config* cfg, char** out);
VB_API vb_status vb_config_set_seed(vb_config* cfg, uint64_t seed);
VB_API vb_status vb_config_get_seed(const vb_config* cfg, uint64_t* out);
VB_API vb_status vb_config_dim(const vb_config* cfg, size_t* out);
/* Writes up to `capacity` doubles of x_init; *dim receives the dimension. */
VB_API vb_status vb_config_x_init(const vb_config* cfg, double* out, size_t capacity, size_t* dim);
VB_API void vb_config_free(vb_config* cfg);

VB_API vb_status vb_checkpoint_load(const char* path, vb_checkpoint** out);
/* "pretrained", "finetuned" or "rl"; valid while the checkpoint lives. */
VB_API const char* vb_checkpoint_stage(const vb_checkpoint* ckpt);
VB_API vb_status vb_checkpoint_dim(const vb_checkpoint* ckpt, size_t* out);
/* Embedded config snapshot; free with vb_config_free. */
VB_API vb_status vb_checkpoint_config(const vb_checkpoint* ckpt, vb_config** out);
/* n_steps + 1 frames of `dim` doubles written row-major into out. */
VB_API vb_status vb_checkpoint_rollout(const vb_checkpoint* ckpt, const double* x0, size_t dim, size_t n_steps,
                                       uint64_t seed, double* out);
VB_API void vb_checkpoint_free(vb_checkpoint* ckpt);

/* Workflow commands. Output directories are created as needed. */
VB_API vb_status vb_cmd_oracle_sim(const vb_config* cfg, const char* out_dir);
VB_API vb_status vb_cmd_build_pairs(const vb_config* cfg, const char* trajectory_csv, const char* out_dir,
                                    size_t max_pairs);
VB_API vb_status vb_cmd_pretrain(const vb_config* cfg, const char* dataset_csv, const char* out_dir,
                                 vb_progress_fn progress, void* user);
VB_API vb_status vb_cmd_finetune(const vb_config* cfg, const char* checkpoint, const char* pairs_csv,
                                 const char* out_dir, vb_progress_fn progress, void* user);
/* Targets come from targets_csv when non-NULL, otherwise one target
 * (config x_init, x_ref[0..dim)). */
VB_API vb_status vb_cmd_rl_finetune(const vb_config* cfg, const char* checkpoint, const char* targets_csv,
                                    const double* x_ref, size_t dim, const char* out_dir, vb_progress_fn progress,
                                    void* user);
VB_API vb_status vb_cmd_generate(const char* checkpoint, const double* x0, size_t dim, size_t n_steps, uint64_t seed,
                                 const char* out_dir);
/* Metric report JSON is returned through metrics_json when non-NULL. */
VB_API vb_status vb_cmd_evaluate(const vb_config* cfg, const char* generated_csv, const char* reference_csv,
                                 const char* out_dir, char** metrics_json);

#ifdef __cplusplus
}
#endif

#endif /* VBRIDGE_VBRIDGE_H */
