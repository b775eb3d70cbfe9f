#ifndef MCSENSE_H
#define MCSENSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McsStatus {
  MCS_STATUS_OK = 0,
  MCS_STATUS_NULL_POINTER = 1,
  MCS_STATUS_INVALID_ARGUMENT = 2,
  MCS_STATUS_INVALID_MATRIX = 3,
  MCS_STATUS_REDUCIBLE = 4,
  MCS_STATUS_SINGULAR = 5,
  MCS_STATUS_DOMINATION_VIOLATED = 6,
  MCS_STATUS_INDEX_OUT_OF_RANGE = 7,
  MCS_STATUS_BUFFER_TOO_SMALL = 8,
  MCS_STATUS_IO = 9,
  MCS_STATUS_NUMERICAL = 10,
  MCS_STATUS_PANIC = 99,
} McsStatus;

typedef enum McsMethod {
  MCS_METHOD_FAST = 0,
  MCS_METHOD_ORACLE = 1,
} McsMethod;

// Opaque square matrix.
typedef struct McsMatrix McsMatrix;

// Opaque sensitivity table.
typedef struct McsSensitivities McsSensitivities;

// Log-scale bounds for one `(F, F~, S)` triple. `ocinneide` is NaN when absent.
typedef struct McsBoundSummary {
  double true_error;
  double log_form;
  double linear_form;
  double ipsen_meyer;
  double ocinneide;
  double cho_meyer;
} McsBoundSummary;

typedef struct McsEstimate {
  double point;
  double std_error;
  uint64_t n;
  uint64_t seed;
} McsEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *mcs_version(void);

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into this library on the same thread.
const char *mcs_last_error(void);

// Copies `dim * dim` row-major values into a new matrix handle.
//
// # Safety
// `data` must point to `dim * dim` readable doubles and `out` must be writable.
enum McsStatus mcs_matrix_new(size_t dim, const double *data, struct McsMatrix **out);

// Reads a CSV or Matrix Market file into a new matrix handle.
//
// # Safety
// `path` must be a nul-terminated string and `out` must be writable.
enum McsStatus mcs_matrix_read(const char *path, struct McsMatrix **out);

// Dimension of a matrix handle, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t mcs_matrix_dim(const struct McsMatrix *m);

// Copies the matrix in row-major order into `buf` (capacity `len`).
//
// # Safety
// `m` must be a live handle and `buf` must hold `len` writable doubles.
enum McsStatus mcs_matrix_copy(const struct McsMatrix *m, double *buf, size_t len);

// Releases a matrix handle. Null is ignored.
//
// # Safety
// `m` must be null or a handle not yet freed.
void mcs_matrix_free(struct McsMatrix *m);

// Invariant distribution of a stochastic matrix into `pi` (capacity `len`).
//
// # Safety
// `m` must be a live handle; `pi` must hold `len` doubles; `residual` may be null.
enum McsStatus mcs_stationary(const struct McsMatrix *m, double *pi, size_t len, double *residual);

// Sensitivities `Q_ij(S)` of an irreducible substochastic matrix.
//
// # Safety
// `s` must be a live handle and `out` must be writable.
enum McsStatus mcs_sensitivities(const struct McsMatrix *s,
                                 enum McsMethod method,
                                 struct McsSensitivities **out);

// `Q_ij` for `i ≠ j`.
//
// # Safety
// `q` must be a live handle and `out` must be writable.
enum McsStatus mcs_sensitivities_get(const struct McsSensitivities *q,
                                     size_t i,
                                     size_t j,
                                     double *out);

// Row-major `L × L` table into `buf`; the diagonal is NaN.
//
// # Safety
// `q` must be a live handle and `buf` must hold `len` doubles.
enum McsStatus mcs_sensitivities_copy(const struct McsSensitivities *q, double *buf, size_t len);

// Releases a sensitivity handle. Null is ignored.
//
// # Safety
// `q` must be null or a handle not yet freed.
void mcs_sensitivities_free(struct McsSensitivities *q);

// Bound report for stochastic `f`, `ftilde` and lower envelope `s`
// (null `s` selects the entrywise minimum).
//
// # Safety
// `f` and `ftilde` must be live handles, `s` null or live, `out` writable.
enum McsStatus mcs_bounds(const struct McsMatrix *f,
                          const struct McsMatrix *ftilde,
                          const struct McsMatrix *s,
                          struct McsBoundSummary *out);

// Hilly-landscape matrix `αF` on `size` states with the default potential.
//
// # Safety
// `out` must be writable.
enum McsStatus mcs_hilly_matrix(size_t size, double alpha, struct McsMatrix **out);

// Monte Carlo estimate of `Q_ij(S)` from `n` seeded trajectories.
//
// # Safety
// `s` must be a live handle and `out` must be writable.
enum McsStatus mcs_estimate_q(const struct McsMatrix *s,
                              size_t i,
                              size_t j,
                              uint64_t n,
                              uint64_t seed,
                              struct McsEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCSENSE_H */
