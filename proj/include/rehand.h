/* C interface to the rehand library: dataset generation, two-phase training
 * with mesh recycling, evaluation, rendering, and the stock experiments.
 *
 * Conventions: functions returning rh_status produce RH_OK on success and a
 * nonzero code on failure; functions returning pointers produce NULL on
 * failure. In both cases rh_last_error() carries a message for the calling
 * thread. Strings returned through char** out-parameters are heap-allocated
 * and must be released with rh_string_free(). Handles are opaque and must be
 * released with their matching _close function; a dataset handle must outlive
 * every model handle created from it.
 *
 * Configs are JSON text. Training configs understand: dataset_dir, out_dir,
 * backgrounds (manifest path override), seed, batch_size, max_epochs,
 * initial_lr, lr_decay, plateau_epochs, weight_decay, alpha, beta, gamma,
 * norm ("l1"/"l2"), recycle, corr, intrinsics ("predicted"/"ground-truth"),
 * corr_grads ("both"/"phase2"), eval_every, max_bad_steps. Dataset generation
 * configs understand: train_count, eval_count, background_count,
 * eval_background_count, background_size, seed, width, height. Absent keys
 * keep their defaults; unknown keys are errors.
 */
#ifndef REHAND_H
#define REHAND_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__) || defined(__clang__)
#define RH_API __attribute__((visibility("default")))
#else
#define RH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rh_status {
  RH_OK = 0,
  RH_ERROR = 1,         /* I/O failures, bad inputs, internal errors */
  RH_ERROR_CONFIG = 2,  /* rejected configuration */
  RH_ERROR_NUMERIC = 3, /* non-finite values, aborted optimization */
} rh_status;

typedef struct rh_dataset rh_dataset; /* an opened on-disk dataset */
typedef struct rh_model rh_model;     /* hand template + estimator parameters */

RH_API const char* rh_version(void);

/* Message for the most recent failure on this thread; never NULL. */
RH_API const char* rh_last_error(void);

RH_API void rh_string_free(char* s);

/* Writes a self-contained dataset (hand template, backgrounds, train/eval
 * records with rendered images) under root_dir, which must not already
 * contain files. config_json may be NULL for all defaults. */
RH_API rh_status rh_generate_dataset(const char* root_dir, const char* config_json);

RH_API rh_dataset* rh_dataset_open(const char* root_dir);
RH_API void rh_dataset_close(rh_dataset* ds);

/* split is "train" or "eval". */
RH_API rh_status rh_dataset_count(const rh_dataset* ds, const char* split, int64_t* count_out);

/* Freshly initialized model for the dataset's hand template. */
RH_API rh_model* rh_model_init(const rh_dataset* ds, uint64_t seed);

/* Model restored from a checkpoint; the checkpoint must have been trained
 * against the dataset's hand template. */
RH_API rh_model* rh_model_load(const rh_dataset* ds, const char* checkpoint_file);

RH_API void rh_model_close(rh_model* m);

/* Runs the model over a split and reports pose/mesh errors after rigid
 * alignment. report_json_out receives an object with the aggregate metrics
 * and a "samples" array of per-record rows. inject_ground_truth scores the
 * ground truth against itself (a wiring check: errors must be zero). */
RH_API rh_status rh_evaluate(const rh_model* m, const rh_dataset* ds, const char* split,
                      int inject_ground_truth, char** report_json_out);

/* Renders one sample's hand over a background drawn from the split's pool by
 * seed and writes a PNG. ground_truth_mesh selects the stored mesh and
 * camera; otherwise the model's own estimate of both is rendered. */
RH_API rh_status rh_render(const rh_model* m, const rh_dataset* ds, const char* split, int64_t index,
                    int ground_truth_mesh, uint64_t seed, const char* out_png);

/* Full training run driven by a config with dataset_dir and out_dir set.
 * Writes checkpoint + logs under out_dir and returns a JSON summary
 * (checkpoint path, steps, final metrics). */
RH_API rh_status rh_train(const char* config_json, char** summary_json_out);

/* Ablation over at least three seeds: single-phase baseline, recycling
 * without correlation, and the full objective, sharing init and data order
 * per seed. Returns the formatted result table. */
RH_API rh_status rh_ablation(const char* config_json, const uint64_t* seeds, size_t seed_count,
                      char** table_out);

/* Re-renders the training set from ground-truth meshes, trains on the
 * re-renders alone, and compares against an original-data run plus the
 * untrained init. Returns the formatted result table. */
RH_API rh_status rh_synthetic_only(const char* config_json, char** table_out);

/* Central-difference audit of the analytic gradient of the full two-phase
 * objective on freshly generated scenes. config_json keys (all optional):
 * trials, seed, eps, coords, norm. Writes the worst relative error over all
 * trials to max_rel_err_out. */
RH_API rh_status rh_grad_check(const char* config_json, double* max_rel_err_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* REHAND_H */
