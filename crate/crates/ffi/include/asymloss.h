#ifndef ASYMLOSS_H
#define ASYMLOSS_H

/* Generated by cbindgen from asymloss-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes mirroring the library's error classes.
typedef enum AsymStatus {
  ASYM_STATUS_OK = 0,
  // Parameter or configuration out of its documented domain.
  ASYM_STATUS_CONFIG_ERROR = 1,
  // Runtime or numeric failure (invalid input, singular gradient).
  ASYM_STATUS_RUNTIME_ERROR = 2,
  // I/O or serialization failure.
  ASYM_STATUS_IO_ERROR = 3,
  // A required pointer argument was null.
  ASYM_STATUS_NULL_POINTER = 4,
  // A string argument was not valid UTF-8.
  ASYM_STATUS_INVALID_UTF8 = 5,
} AsymStatus;

// Opaque handle around a validated loss specification.
typedef struct AsymLoss AsymLoss;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message for this thread, or null if none. The pointer stays
// valid until the next failing call on the same thread.
const char *asymloss_last_error(void);

// Parses a loss spec from JSON (e.g. `{"kind":"amse","params":{"a":30.0,"q":2.0}}`)
// into a handle. Release with [`asymloss_loss_free`].
//
// # Safety
// `json` must be a valid NUL-terminated C string; `out` must be a valid
// pointer to receive the handle.
enum AsymStatus asymloss_loss_parse(const char *json, struct AsymLoss **out);

// Releases a handle returned by [`asymloss_loss_parse`]. Null is a no-op.
//
// # Safety
// `handle` must be a pointer previously returned by this library and not
// yet freed.
void asymloss_loss_free(struct AsymLoss *handle);

// Loss value at a probability vector `p` of length `k` with label `y`.
//
// # Safety
// `p` must point to `k` readable doubles; `out` must be writable.
enum AsymStatus asymloss_loss_value(const struct AsymLoss *handle,
                                    const double *p,
                                    size_t k,
                                    size_t y,
                                    double *out);

// Per-class loss row at `p`; writes `k` doubles to `out`.
//
// # Safety
// `p` must point to `k` readable doubles; `out` to `k` writable doubles.
enum AsymStatus asymloss_loss_row(const struct AsymLoss *handle,
                                  const double *p,
                                  size_t k,
                                  double *out);

// Analytic gradient with respect to the probability entries; writes `k`
// doubles to `out`.
//
// # Safety
// `p` must point to `k` readable doubles; `out` to `k` writable doubles.
enum AsymStatus asymloss_loss_grad_p(const struct AsymLoss *handle,
                                     const double *p,
                                     size_t k,
                                     size_t y,
                                     double *out);

// Gradient with respect to logits (chain rule through softmax); writes `k`
// doubles to `out`.
//
// # Safety
// `logits` must point to `k` readable doubles; `out` to `k` writable doubles.
enum AsymStatus asymloss_loss_grad_logits(const struct AsymLoss *handle,
                                          const double *logits,
                                          size_t k,
                                          size_t y,
                                          double *out);

// Numerically stable softmax; writes `k` doubles to `out`.
//
// # Safety
// `logits` must point to `k` readable doubles; `out` to `k` writable doubles.
enum AsymStatus asymloss_softmax(const double *logits, size_t k, double *out);

// Runs the full asymmetry verdict for the AMSE family at (q, a) against a
// weight vector of length `k`: closed-form threshold, sup h, and the
// brute-force oracle. On success `*json_out` receives a JSON report
// (release with [`asymloss_string_free`]).
//
// # Safety
// `weights` must point to `k` readable doubles; `json_out` must be a valid
// pointer to receive the string.
enum AsymStatus asymloss_verify_amse(double q,
                                     double a,
                                     const double *weights,
                                     size_t k,
                                     size_t grid,
                                     size_t resolution,
                                     char **json_out);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be a pointer previously returned by this library and not yet
// freed.
void asymloss_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ASYMLOSS_H */
