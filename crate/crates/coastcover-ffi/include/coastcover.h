/* C ABI for the coastcover land-cover pipeline. */

#ifndef COASTCOVER_H
#define COASTCOVER_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Per-class accuracy statistic selector.
 */
typedef enum CcMetric {
  CC_METRIC_PRODUCERS_ACCURACY = 0,
  CC_METRIC_USERS_ACCURACY = 1,
  CC_METRIC_RAND_ACCURACY = 2,
} CcMetric;

/**
 * Result code for every fallible call.
 */
typedef enum CcStatus {
  /**
   * Success; out-parameters are valid.
   */
  CC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  CC_STATUS_INVALID_UTF8 = 2,
  /**
   * The requested quantity is undefined for this input (e.g. kappa
   * of a degenerate matrix); not an error.
   */
  CC_STATUS_NOT_AVAILABLE = 3,
  /**
   * An index was outside the valid range.
   */
  CC_STATUS_OUT_OF_RANGE = 4,
  /**
   * The operation itself failed; see cc_last_error().
   */
  CC_STATUS_FAILED = 5,
} CcStatus;

/**
 * Opaque confusion-matrix handle.
 */
typedef struct CcConfusion CcConfusion;

/**
 * Opaque label-raster handle.
 */
typedef struct CcLabels CcLabels;

/**
 * Opaque class-scheme handle.
 */
typedef struct CcScheme CcScheme;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *cc_last_error(void);

/**
 * New handle for the built-in six-class coastal scheme.
 */
struct CcScheme *cc_scheme_default(void);

/**
 * Load a scheme from a config file; writes the handle to `out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_scheme_load(const char *path, struct CcScheme **out);

/**
 * Number of classes in the scheme (excluding the masked sentinel).
 */
enum CcStatus cc_scheme_class_count(const struct CcScheme *scheme, uintptr_t *out);

/**
 * Copy the name of class `id` into `buf` (NUL-terminated, truncated to
 * `buf_len` bytes including the terminator).
 */
enum CcStatus cc_scheme_class_name(const struct CcScheme *scheme,
                                   uint8_t id,
                                   char *buf,
                                   uintptr_t buf_len);

/**
 * Release a scheme handle. Null is a no-op.
 */
void cc_scheme_free(struct CcScheme *scheme);

/**
 * Load a label raster (gray = raw ids, color = nearest-color decode).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_labels_load(const char *path,
                             const struct CcScheme *scheme,
                             struct CcLabels **out);

/**
 * Write a label raster as a single-channel id PNG with a world file.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum CcStatus cc_labels_save(const struct CcLabels *labels, const char *path);

enum CcStatus cc_labels_width(const struct CcLabels *labels, uint32_t *out);

enum CcStatus cc_labels_height(const struct CcLabels *labels, uint32_t *out);

/**
 * Class id at (col, row); the masked sentinel is 255.
 */
enum CcStatus cc_labels_at(const struct CcLabels *labels, uint32_t col, uint32_t row, uint8_t *out);

/**
 * Majority-filtered copy; `radius` >= 1, `iterations` >= 1.
 */
enum CcStatus cc_labels_majority_filter(const struct CcLabels *labels,
                                        uint32_t radius,
                                        uint32_t iterations,
                                        struct CcLabels **out);

/**
 * Per-class areas in hectares, indexed by class id. `areas_len` must be
 * at least the scheme's class count.
 */
enum CcStatus cc_labels_class_areas(const struct CcLabels *labels,
                                    double *areas,
                                    uintptr_t areas_len);

/**
 * Release a labels handle. Null is a no-op.
 */
void cc_labels_free(struct CcLabels *labels);

/**
 * Confusion matrix from `n` seeded random points over the non-masked
 * intersection of a reference and a predicted raster.
 */
enum CcStatus cc_confusion_build(const struct CcLabels *reference,
                                 const struct CcLabels *predicted,
                                 uintptr_t n,
                                 uint64_t seed,
                                 struct CcConfusion **out);

enum CcStatus cc_confusion_overall_accuracy(const struct CcConfusion *cm, double *out);

/**
 * Cohen's kappa; `CC_STATUS_NOT_AVAILABLE` when undefined.
 */
enum CcStatus cc_confusion_kappa(const struct CcConfusion *cm, double *out);

/**
 * One per-class statistic; `CC_STATUS_NOT_AVAILABLE` when the
 * denominator is zero.
 */
enum CcStatus cc_confusion_class_metric(const struct CcConfusion *cm,
                                        uintptr_t class_,
                                        enum CcMetric metric,
                                        double *out);

/**
 * Release a confusion-matrix handle. Null is a no-op.
 */
void cc_confusion_free(struct CcConfusion *cm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COASTCOVER_H */
