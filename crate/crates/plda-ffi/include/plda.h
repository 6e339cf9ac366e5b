#ifndef PLDA_H
#define PLDA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum PldaStatus {
  PLDA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PLDA_STATUS_NULL_ARGUMENT = 1,
  /**
   * Invalid input: bad configuration, dimensions, or argument values.
   */
  PLDA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * File or parse error.
   */
  PLDA_STATUS_IO_ERROR = 3,
  /**
   * Numerical or other runtime failure.
   */
  PLDA_STATUS_RUNTIME_ERROR = 4,
  /**
   * A panic was caught at the FFI boundary.
   */
  PLDA_STATUS_PANIC = 5,
} PldaStatus;

/**
 * A run-configuration handle.
 */
typedef struct PldaConfig PldaConfig;

/**
 * A trained detector handle.
 */
typedef struct PldaDetector PldaDetector;

/**
 * A time series handle (observations plus optional point labels).
 */
typedef struct PldaSeries PldaSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty string if none.
 *
 * # Safety
 * The returned pointer is only valid until the next failing call on this
 * thread.
 */
const char *plda_last_error(void);

/**
 * Loads a series from CSV (columns f0..f{d-1}, optional `label` column).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PldaStatus plda_series_load_csv(const char *path, struct PldaSeries **out);

/**
 * Builds a series from a row-major buffer of `n` points with `d` features.
 *
 * # Safety
 * `data` must point to `n * d` doubles; `out` must be a valid pointer.
 */
enum PldaStatus plda_series_from_data(const double *data,
                                      size_t n,
                                      size_t d,
                                      struct PldaSeries **out);

/**
 * Number of points in the series; 0 for null.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t plda_series_len(const struct PldaSeries *series);

/**
 * Feature dimension of the series; 0 for null.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t plda_series_dim(const struct PldaSeries *series);

/**
 * Frees a series handle; null is a no-op.
 *
 * # Safety
 * `series` must be null or an unfreed handle from this library.
 */
void plda_series_free(struct PldaSeries *series);

/**
 * Creates a configuration with the library defaults.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PldaStatus plda_config_default(struct PldaConfig **out);

/**
 * Loads a configuration from TOML; unknown keys are errors.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PldaStatus plda_config_load(const char *path, struct PldaConfig **out);

/**
 * Frees a configuration handle; null is a no-op.
 *
 * # Safety
 * `config` must be null or an unfreed handle from this library.
 */
void plda_config_free(struct PldaConfig *config);

/**
 * Trains a detector on `series`. With `augment` true this runs the full
 * augmentation pipeline; false trains the plain baseline.
 *
 * # Safety
 * All handles must be valid; `out` must be a valid pointer.
 */
enum PldaStatus plda_train(const struct PldaSeries *series,
                           const struct PldaConfig *config,
                           uint64_t seed,
                           bool augment,
                           struct PldaDetector **out);

/**
 * Loads a detector checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PldaStatus plda_detector_load(const char *path, struct PldaDetector **out);

/**
 * Saves a detector checkpoint.
 *
 * # Safety
 * `detector` must be a valid handle and `path` a NUL-terminated string.
 */
enum PldaStatus plda_detector_save(const struct PldaDetector *detector, const char *path);

/**
 * Window length the detector was trained with; 0 for null.
 *
 * # Safety
 * `detector` must be null or a live handle.
 */
size_t plda_detector_window(const struct PldaDetector *detector);

/**
 * Frees a detector handle; null is a no-op.
 *
 * # Safety
 * `detector` must be null or an unfreed handle from this library.
 */
void plda_detector_free(struct PldaDetector *detector);

/**
 * Per-point anomaly scores for `series`; `out_scores` must hold exactly
 * as many doubles as the series has points.
 *
 * # Safety
 * Handles must be valid; `out_scores` must point to `len` doubles.
 */
enum PldaStatus plda_anomaly_scores(const struct PldaDetector *detector,
                                    const struct PldaSeries *series,
                                    double *out_scores,
                                    size_t len);

/**
 * Best F1 over all thresholds, optionally point-adjusted. Labels are 0/1.
 *
 * # Safety
 * `scores` and `labels` must each point to `n` elements; out pointers may
 * be null when a value is not wanted.
 */
enum PldaStatus plda_best_f1(const double *scores,
                             const uint8_t *labels,
                             size_t n,
                             bool adjust,
                             double *out_f1,
                             double *out_threshold);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLDA_H */
