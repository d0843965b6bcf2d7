#ifndef BOOTCI_H
#define BOOTCI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BciStatus {
  BCI_STATUS_OK = 0,
  BCI_STATUS_NULL_POINTER = 1,
  BCI_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The method ran but could not produce a value for this sample.
   */
  BCI_STATUS_METHOD_FAILURE = 3,
  BCI_STATUS_PANIC = 4,
} BciStatus;

/**
 * Opaque sample handle.
 */
typedef struct BciSample BciSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a one-column sample from `len` values.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` must be writable.
 * The handle must be released with [`bci_sample_free`].
 */
enum BciStatus bci_sample_new(const double *values, uintptr_t len, struct BciSample **out);

/**
 * Creates a paired sample from two columns of `len` values each.
 *
 * # Safety
 * `x` and `y` must each point to `len` readable doubles and `out` must be
 * writable. The handle must be released with [`bci_sample_free`].
 */
enum BciStatus bci_sample_new_paired(const double *x,
                                     const double *y,
                                     uintptr_t len,
                                     struct BciSample **out);

/**
 * Number of observations in the sample, 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
uintptr_t bci_sample_len(const struct BciSample *sample);

/**
 * Releases a sample. Null is ignored.
 *
 * # Safety
 * `sample` must be null or a handle not yet freed.
 */
void bci_sample_free(struct BciSample *sample);

/**
 * Evaluates a functional (`"mean"`, `"median"`, `"std"`, `"q05"`, `"q95"`, `"corr"`) on a sample.
 *
 * # Safety
 * `sample` must be a live handle, `functional` a NUL-terminated string and
 * `out` writable.
 */
enum BciStatus bci_estimate(const struct BciSample *sample, const char *functional, double *out);

/**
 * One-sided endpoint at level `alpha`: the true value lies below it with
 * probability about `alpha`.
 *
 * `b_inner` is used by the double bootstrap and `b_inner_bt` by the
 * studentized bootstrap; other methods ignore them.
 *
 * # Safety
 * `sample` must be a live handle, the strings NUL-terminated and `out`
 * writable.
 */
enum BciStatus bci_endpoint(const struct BciSample *sample,
                            const char *functional,
                            const char *method,
                            double alpha,
                            uintptr_t b,
                            uintptr_t b_inner,
                            uintptr_t b_inner_bt,
                            uint64_t seed,
                            double *out);

/**
 * Kullback-Leibler divergence (bits) of observed coverage `p` from nominal `pi`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BciStatus bci_kl_coverage(double p, double pi, double *out);

/**
 * Coverage values whose divergence from `pi` equals `level`.
 *
 * # Safety
 * `lower` and `upper` must be writable.
 */
enum BciStatus bci_kl_bounds(double pi, double level, double *lower, double *upper);

/**
 * Bradley's robustness band around `pi` with multiplier `k`.
 *
 * # Safety
 * `lower` and `upper` must be writable.
 */
enum BciStatus bci_bradley_bounds(double pi, double k, double *lower, double *upper);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *bci_last_error(void);

/**
 * Library version as a static string.
 */
const char *bci_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOOTCI_H */
