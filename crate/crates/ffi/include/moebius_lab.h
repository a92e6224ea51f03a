#ifndef MOEBIUS_LAB_H
#define MOEBIUS_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlStatus {
  ML_STATUS_OK = 0,
  ML_STATUS_INVALID_ARGUMENT = 1,
  ML_STATUS_NULL_POINTER = 2,
  ML_STATUS_IO = 3,
  ML_STATUS_CORRUPT_CACHE = 4,
  ML_STATUS_NUMERICAL_FAILURE = 5,
  ML_STATUS_IDENTITY_VIOLATION = 6,
  ML_STATUS_RESOURCE = 7,
  ML_STATUS_PANIC = 8,
} MlStatus;

typedef enum MlWindow {
  ML_WINDOW_RECTANGULAR = 0,
  ML_WINDOW_HANN = 1,
} MlWindow;

/**
 * Opaque Mertens series.
 */
typedef struct MlMertens MlMertens;

/**
 * Opaque μ table.
 */
typedef struct MlMuTable MlMuTable;

typedef struct MlBoundReport {
  uint64_t n;
  double alpha;
  double k_alpha_2;
  double bound;
  int64_t observed_m;
  bool holds;
  bool holds_two_sided;
  double probability;
} MlBoundReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ml_last_error_message(void);

/**
 * Static, NUL-terminated name of a status code.
 */
const char *ml_status_name(enum MlStatus status);

/**
 * Builds μ(1..=n_max) by the divisor recursion.
 *
 * # Safety
 * `out` must be valid for writes. On success `*out` owns a table to be
 * released with [`ml_mu_free`].
 */
enum MlStatus ml_mu_build_recursive(size_t n_max, struct MlMuTable **out);

/**
 * Builds μ(1..=n_max) with the factorization sieve.
 *
 * # Safety
 * As [`ml_mu_build_recursive`].
 */
enum MlStatus ml_mu_build_sieve(size_t n_max, struct MlMuTable **out);

/**
 * Reads a MUT1 cache file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum MlStatus ml_mu_load(const char *path, struct MlMuTable **out);

/**
 * Writes a MUT1 cache file.
 *
 * # Safety
 * `table` must come from this library; `path` must be NUL-terminated.
 */
enum MlStatus ml_mu_save(const struct MlMuTable *table, const char *path);

/**
 * Number of entries; 0 for NULL.
 *
 * # Safety
 * `table` must be NULL or come from this library.
 */
size_t ml_mu_len(const struct MlMuTable *table);

/**
 * μ(n) for 1 ≤ n ≤ len.
 *
 * # Safety
 * `table` must come from this library and `out` be valid for writes.
 */
enum MlStatus ml_mu_get(const struct MlMuTable *table, size_t n, int8_t *out);

/**
 * Copies μ(1..=min(len, capacity)) into `buf`; `*written` receives the count.
 *
 * # Safety
 * `buf` must be valid for `capacity` writes.
 */
enum MlStatus ml_mu_copy(const struct MlMuTable *table,
                         int8_t *buf,
                         size_t capacity,
                         size_t *written);

/**
 * 64-bit FNV-1a of the value bytes.
 *
 * # Safety
 * `table` must come from this library and `out` be valid for writes.
 */
enum MlStatus ml_mu_checksum(const struct MlMuTable *table, uint64_t *out);

/**
 * # Safety
 * `table` must be NULL or a handle from this library not yet freed.
 */
void ml_mu_free(struct MlMuTable *table);

/**
 * μ(n) as the sum of primitive n-th roots of unity (n ≤ 10000).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MlStatus ml_mu_root_of_unity(uint64_t n, int8_t *out);

/**
 * Prefix sums of a table.
 *
 * # Safety
 * `table` must come from this library and `out` be valid for writes. On
 * success `*out` must be released with [`ml_mertens_free`].
 */
enum MlStatus ml_mertens_new(const struct MlMuTable *table, struct MlMertens **out);

/**
 * M(n) for 1 ≤ n ≤ len.
 *
 * # Safety
 * `series` must come from this library and `out` be valid for writes.
 */
enum MlStatus ml_mertens_get(const struct MlMertens *series, size_t n, int64_t *out);

/**
 * # Safety
 * `series` must be NULL or a handle from this library not yet freed.
 */
void ml_mertens_free(struct MlMertens *series);

/**
 * det(R_n) for the n×n Redheffer matrix, 1 ≤ n ≤ 512.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MlStatus ml_redheffer_determinant(size_t n, int64_t *out);

/**
 * U·V = V·U = I for the n×n divisibility matrix and its Möbius inverse.
 *
 * # Safety
 * `table` must come from this library and `out` be valid for writes.
 */
enum MlStatus ml_verify_inverse(const struct MlMuTable *table, size_t n, bool *out);

/**
 * √(6/π²)·K_{α/2}·√n bound evaluated against M(n).
 *
 * # Safety
 * `series` must come from this library and `out` be valid for writes.
 */
enum MlStatus ml_clt_bound(const struct MlMertens *series,
                           size_t n,
                           double alpha,
                           struct MlBoundReport *out);

/**
 * Welch PSD of the table followed by its max/mean ratio over non-DC bins.
 *
 * # Safety
 * `table` must come from this library; `out_ratio` and `out_segments` must
 * be valid for writes.
 */
enum MlStatus ml_psd_peak_ratio(const struct MlMuTable *table,
                                size_t segment_len,
                                double overlap,
                                enum MlWindow window,
                                double *out_ratio,
                                size_t *out_segments);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOEBIUS_LAB_H */
