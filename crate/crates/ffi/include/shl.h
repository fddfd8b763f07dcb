#ifndef SHL_H
#define SHL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShlStatus {
  SHL_STATUS_OK = 0,
  SHL_STATUS_NULL_POINTER = 1,
  SHL_STATUS_INVALID_UTF8 = 2,
  SHL_STATUS_UNKNOWN_SPEC = 3,
  SHL_STATUS_DOMAIN = 4,
  SHL_STATUS_ACCURACY = 5,
  SHL_STATUS_SEARCH_FAILURE = 6,
  SHL_STATUS_CONSTRUCTION = 7,
  SHL_STATUS_STEP_FAILURE = 8,
  SHL_STATUS_NUMERICAL_FAILURE = 9,
  SHL_STATUS_CONFIG = 10,
  SHL_STATUS_IO = 11,
  SHL_STATUS_PANIC = 99,
} ShlStatus;

/**
 * Singular stationary profile with dense output.
 */
typedef struct ShlProfile ShlProfile;

/**
 * Catalog nonlinearity.
 */
typedef struct ShlSpec ShlSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *shl_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void shl_string_free(char *s);

/**
 * Parses a catalog key such as `smoothed:B=2` or `power_exp:q=2,r=0`.
 *
 * # Safety
 * `key` must be a NUL-terminated string; `out` must be writable.
 */
enum ShlStatus shl_spec_new(const char *key, struct ShlSpec **out);

/**
 * # Safety
 * `spec` must come from [`shl_spec_new`] and not have been freed. Null is ignored.
 */
void shl_spec_free(struct ShlSpec *spec);

/**
 * f(s) and its derivatives for `order` in 0..=2.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_spec_evaluate(const struct ShlSpec *spec, double s, uint8_t order, double *out);

/**
 * F(s) = ∫_s^∞ dσ/f(σ).
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_spec_big_f(const struct ShlSpec *spec, double s, double *out);

/**
 * Inverse of F.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_spec_big_f_inv(const struct ShlSpec *spec, double y, double *out);

/**
 * Smallest β from which the supersolution conditions hold.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_spec_beta(const struct ShlSpec *spec, double *out);

/**
 * Hypothesis report as JSON. Free the result with [`shl_string_free`].
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_spec_classify_json(const struct ShlSpec *spec, char **out);

/**
 * Shoots the singular profile. Non-positive `r_seed` or `ode_tol` select
 * the defaults (10⁻⁶ and 10⁻⁹).
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_profile_build(const struct ShlSpec *spec,
                                 double r_seed,
                                 double ode_tol,
                                 struct ShlProfile **out);

/**
 * # Safety
 * `profile` must come from [`shl_profile_build`] and not have been freed. Null is ignored.
 */
void shl_profile_free(struct ShlProfile *profile);

/**
 * Wall radius R with U(R) = 0.
 *
 * # Safety
 * `profile` must be a live handle; `out` must be writable.
 */
enum ShlStatus shl_profile_radius(const struct ShlProfile *profile, double *out);

/**
 * U(r) and dU/dr for r in [r_seed, R]. Either output may be null.
 *
 * # Safety
 * `profile` must be a live handle; non-null outputs must be writable.
 */
enum ShlStatus shl_profile_eval(const struct ShlProfile *profile, double r, double *u, double *du);

/**
 * Runs the two-solution pipeline and returns its report as JSON.
 * `config` is the text of a run configuration file; null means defaults.
 *
 * # Safety
 * `config` must be null or NUL-terminated; `out` must be writable.
 */
enum ShlStatus shl_demo_run_json(const char *config, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHL_H */
