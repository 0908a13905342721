#ifndef MSI_FFI_H
#define MSI_FFI_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsiLewis {
  MSI_LEWIS_HIGHLY_ACCURATE = 0,
  MSI_LEWIS_GOOD = 1,
  MSI_LEWIS_REASONABLE = 2,
  MSI_LEWIS_INACCURATE = 3,
} MsiLewis;

typedef enum MsiQvMode {
  MSI_QV_MODE_RAW = 0,
  MSI_QV_MODE_INCREMENT = 1,
} MsiQvMode;

typedef enum MsiSfbsMode {
  MSI_SFBS_MODE_SINGLE = 0,
  MSI_SFBS_MODE_PER_RECTANGLE = 1,
} MsiSfbsMode;

typedef enum MsiStatus {
  MSI_STATUS_OK = 0,
  MSI_STATUS_NULL_POINTER = 1,
  MSI_STATUS_INVALID_ARGUMENT = 2,
  MSI_STATUS_INVALID_MODEL = 3,
  MSI_STATUS_DOMAIN = 4,
  MSI_STATUS_NUMERICAL = 5,
  MSI_STATUS_PARSE = 6,
  MSI_STATUS_PANIC = 7,
} MsiStatus;

/**
 * Opaque fitted model.
 */
typedef struct MsiModel MsiModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *msi_last_error(void);

/**
 * Builds a model from raw arrays. `lambda` and `hurst` hold two values;
 * the `H'` arrays need one entry per interval of the matching breakpoints.
 * `H'` outside (0, 1) is accepted; see `msi_model_is_simulatable`.
 *
 * # Safety
 * Every array pointer must be valid for its stated length and `out` must
 * be writable.
 */
enum MsiStatus msi_model_new(const double *lambda,
                             const double *hurst,
                             const double *hprime1,
                             size_t n_hprime1,
                             const double *hprime2,
                             size_t n_hprime2,
                             const double *breakpoints_a,
                             size_t n_breakpoints_a,
                             const double *breakpoints_b,
                             size_t n_breakpoints_b,
                             struct MsiModel **out);

/**
 * Parses a JSON model document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum MsiStatus msi_model_from_json(const char *json, struct MsiModel **out);

/**
 * Serializes a model. Release the string with `msi_string_free`.
 *
 * # Safety
 * `model` must come from this library and `out` must be writable.
 */
enum MsiStatus msi_model_to_json(const struct MsiModel *model, char **out);

/**
 * # Safety
 * `model` must be NULL or a handle from this library not yet freed.
 */
void msi_model_free(struct MsiModel *model);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void msi_string_free(char *s);

/**
 * # Safety
 * `model` must come from this library and `out` must be writable.
 */
enum MsiStatus msi_model_is_simulatable(const struct MsiModel *model, bool *out);

/**
 * Multiplier taking rectangle `(k1, k2)` to `(l1, l2)`; 1-based keys.
 *
 * # Safety
 * `model` must come from this library and `out` must be writable.
 */
enum MsiStatus msi_prediction_factor(const struct MsiModel *model,
                                     size_t k1,
                                     size_t k2,
                                     size_t l1,
                                     size_t l2,
                                     double *out);

/**
 * MAPE over `n` pairs. `exclude` may be NULL; otherwise a nonzero entry
 * drops that position from the average.
 *
 * # Safety
 * `actual`, `predicted` (and `exclude` when non-NULL) must hold `n` items.
 */
enum MsiStatus msi_mape(const double *actual,
                        const double *predicted,
                        const uint8_t *exclude,
                        size_t n,
                        double *out);

enum MsiLewis msi_lewis_class(double gamma);

/**
 * Ratios of consecutive interval lengths. `out` receives `n - 2` values.
 *
 * # Safety
 * `points` must hold `n` values and `out` room for `n - 2`.
 */
enum MsiStatus msi_scale_from_breakpoints(const double *points, size_t n, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum MsiStatus msi_hurst_from_ratio(double ratio, double lambda, double *out);

/**
 * Dyadic `H'` estimate for the 0-based `interval` of a strip-sum series.
 *
 * # Safety
 * `series` must hold `n` values, `points` `n_points` values.
 */
enum MsiStatus msi_hurst_prime_dyadic(const double *series,
                                      size_t n,
                                      const double *points,
                                      size_t n_points,
                                      size_t interval,
                                      double *out);

/**
 * Quadratic variation `SS` of one subinterval partition.
 *
 * # Safety
 * `values` must hold `n` values and `out` must be writable.
 */
enum MsiStatus msi_quadratic_variation(const double *values,
                                       size_t n,
                                       enum MsiQvMode mode,
                                       double *out);

/**
 * Fractional Brownian sheet covariance; `t`, `s`, `hprime` hold two values.
 *
 * # Safety
 * All pointers must be valid for two values; `out` must be writable.
 */
enum MsiStatus msi_fbs_cov(const double *t, const double *s, const double *hprime, double *out);

/**
 * Simple fractional Brownian sheet covariance of a simulatable model.
 *
 * # Safety
 * `model` must come from this library; `t` and `s` hold two values.
 */
enum MsiStatus msi_sfbs_cov(const struct MsiModel *model,
                            const double *t,
                            const double *s,
                            enum MsiSfbsMode mode,
                            double *out);

/**
 * One fractional Brownian sheet realization at `n` points given as
 * interleaved `(t1, t2)` pairs.
 *
 * # Safety
 * `points` must hold `2n` values, `out` room for `n`.
 */
enum MsiStatus msi_simulate_fbs(const double *hprime,
                                const double *points,
                                size_t n,
                                uint64_t seed,
                                double *out);

/**
 * One simple fractional Brownian sheet realization from a model.
 *
 * # Safety
 * `model` must come from this library; `points` must hold `2n` values and
 * `out` room for `n`.
 */
enum MsiStatus msi_simulate_sfbs(const struct MsiModel *model,
                                 enum MsiSfbsMode mode,
                                 const double *points,
                                 size_t n,
                                 uint64_t seed,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSI_FFI_H */
