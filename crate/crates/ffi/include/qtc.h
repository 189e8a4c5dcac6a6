#ifndef QTC_H
#define QTC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QtcStatus {
  QTC_STATUS_OK = 0,
  QTC_STATUS_NULL_POINTER = 1,
  QTC_STATUS_INVALID_UTF8 = 2,
  QTC_STATUS_VALIDATION = 3,
  QTC_STATUS_SCHEMA = 4,
  QTC_STATUS_VERSIONING = 5,
  QTC_STATUS_PARSE = 6,
  QTC_STATUS_NUMERICAL = 7,
  QTC_STATUS_IO = 8,
  QTC_STATUS_PANIC = 9,
} QtcStatus;

/**
 * Trained classifier loaded from `model.json`.
 */
typedef struct QtcModel QtcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next `qtc_*` call on this thread.
 */
const char *qtc_last_error_message(void);

/**
 * Exact fidelity kernel of the linear ZZ feature map with `reps`
 * repetitions on `n_qubits` qubits; `x` and `y` hold `n_qubits` values.
 *
 * # Safety
 * `x` and `y` must point to `n_qubits` doubles and `out` to one double.
 */
enum QtcStatus qtc_exact_kernel(size_t n_qubits,
                                size_t reps,
                                const double *x,
                                const double *y,
                                double *out);

/**
 * Loads a model file. On success `*out` owns a handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QtcStatus qtc_model_load(const char *path, struct QtcModel **out);

/**
 * Parses a model from JSON text. On success `*out` owns a handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QtcStatus qtc_model_from_json(const char *json, struct QtcModel **out);

/**
 * Feature count the model expects per row; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t qtc_model_n_features(const struct QtcModel *model);

/**
 * Class count; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t qtc_model_n_classes(const struct QtcModel *model);

/**
 * Name of class `index`, owned by the handle; null when out of range.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *qtc_model_class_name(const struct QtcModel *model, size_t index);

/**
 * Predicts class indices for `n_rows` row-major rows of `n_cols` values.
 *
 * # Safety
 * `x` must hold `n_rows * n_cols` doubles and `out` room for `n_rows`
 * indices.
 */
enum QtcStatus qtc_model_predict(const struct QtcModel *model,
                                 const double *x,
                                 size_t n_rows,
                                 size_t n_cols,
                                 size_t *out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void qtc_model_free(struct QtcModel *model);

/**
 * Classification report for `n` labelled predictions as JSON. On success
 * `*out` owns a string to release with `qtc_string_free`.
 *
 * # Safety
 * `y_true` and `y_pred` must hold `n` indices, `class_names` must hold
 * `n_classes` NUL-terminated strings, and `out` must be valid.
 */
enum QtcStatus qtc_report_json(const size_t *y_true,
                               const size_t *y_pred,
                               size_t n,
                               const char *const *class_names,
                               size_t n_classes,
                               char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void qtc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTC_H */
