#ifndef SCNPLUS_H
#define SCNPLUS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScnStatus {
  SCN_STATUS_OK = 0,
  SCN_STATUS_NULL_POINTER = 1,
  SCN_STATUS_INVALID_ARGUMENT = 2,
  SCN_STATUS_DATA = 3,
  SCN_STATUS_IO = 4,
  SCN_STATUS_TRAINING_ABORTED = 5,
  SCN_STATUS_FORMAT = 6,
  SCN_STATUS_BUFFER_TOO_SMALL = 7,
  SCN_STATUS_PANIC = 8,
} ScnStatus;

typedef enum ScnVariant {
  SCN_VARIANT_SCN = 0,
  SCN_VARIANT_SCN_PLUS = 1,
  SCN_VARIANT_IRVFL = 2,
  SCN_VARIANT_IRVFL_PLUS = 3,
} ScnVariant;

typedef enum ScnTask {
  SCN_TASK_REGRESSION = 0,
  SCN_TASK_CLASSIFICATION = 1,
} ScnTask;

typedef enum ScnActivation {
  SCN_ACTIVATION_SIGMOID = 0,
  SCN_ACTIVATION_TANH = 1,
} ScnActivation;

/**
 * Opaque trained model.
 */
typedef struct ScnModel ScnModel;

/**
 * Training settings; fill with `scn_train_options_default` first.
 */
typedef struct ScnTrainOptions {
  enum ScnVariant variant;
  enum ScnTask task;
  enum ScnActivation activation;
  size_t l_max;
  /**
   * Training RMSE tolerance; 0 grows to `l_max`.
   */
  double epsilon;
  double c;
  double gamma;
  uint64_t seed;
} ScnTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *scn_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated when `len > 0`). Returns the untruncated message length
 * excluding the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t scn_last_error_message(char *buf, size_t len);

/**
 * Writes the library defaults (SCN+, regression, sigmoid, `l_max` 100,
 * `epsilon` 0, C 0.1, gamma 1e5, seed 0).
 *
 * # Safety
 * `opts` must be null or point to writable `ScnTrainOptions`.
 */
enum ScnStatus scn_train_options_default(struct ScnTrainOptions *opts);

/**
 * Trains on raw attribute rows `z` (`n_rows` x `n_cols`) and one target per
 * row: a real value for regression, a class id for classification.
 * Normalization and target encoding are fitted on these rows.
 *
 * `privileged` lists the attribute columns reserved for training only
 * (sorted or not); the rest form the normal view. When `privileged` is null
 * and `n_privileged` is 0 a seeded half split is drawn. Pass a non-null
 * pointer with `n_privileged = 0` to use every column as normal.
 *
 * # Safety
 * Pointers must be null or reference arrays of the stated sizes; `out` must
 * point to writable storage for one handle.
 */
enum ScnStatus scn_model_train(const double *z,
                               size_t n_rows,
                               size_t n_cols,
                               const double *targets,
                               const size_t *privileged,
                               size_t n_privileged,
                               const struct ScnTrainOptions *opts,
                               struct ScnModel **out);

/**
 * Number of outputs per row written by `scn_model_predict`: 1 for
 * regression, the class count for classification.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t scn_model_n_outputs(const struct ScnModel *model);

/**
 * Attribute count expected by `scn_model_predict` (normal plus privileged).
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t scn_model_n_attributes(const struct ScnModel *model);

/**
 * Hidden node count.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t scn_model_n_nodes(const struct ScnModel *model);

/**
 * Predicts for `n_rows` raw attribute rows. Writes `n_rows * n_outputs`
 * values row-major into `out`: regression values in original target units,
 * or one score per class for classification. Privileged columns are never
 * read.
 *
 * # Safety
 * `z` must hold `n_rows * n_cols` doubles and `out` must have room for
 * `out_len` doubles.
 */
enum ScnStatus scn_model_predict(const struct ScnModel *model,
                                 const double *z,
                                 size_t n_rows,
                                 size_t n_cols,
                                 double *out,
                                 size_t out_len);

/**
 * Predicted class index per row (ties to the lowest index); use
 * `scn_model_class_label` to map it back to the training label.
 *
 * # Safety
 * `z` must hold `n_rows * n_cols` doubles and `out` room for `n_rows` values.
 */
enum ScnStatus scn_model_predict_class(const struct ScnModel *model,
                                       const double *z,
                                       size_t n_rows,
                                       size_t n_cols,
                                       size_t *out);

/**
 * Copies the label of class `index` into `buf` as a NUL-terminated string.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum ScnStatus scn_model_class_label(const struct ScnModel *model,
                                     size_t index,
                                     char *buf,
                                     size_t len);

/**
 * Writes the model as JSON, in the same format as the command-line tool.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum ScnStatus scn_model_save(const struct ScnModel *model, const char *path);

/**
 * Reads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum ScnStatus scn_model_load(const char *path, struct ScnModel **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `model` must be null or a live handle, and is invalid afterwards.
 */
void scn_model_free(struct ScnModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCNPLUS_H */
