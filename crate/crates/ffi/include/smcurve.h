#ifndef SMCURVE_H
#define SMCURVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which norm an accessor reads.
 */
typedef enum SmcQuantity {
  /**
   * Norm of t_D over the CM 0-cycle.
   */
  SMC_QUANTITY_VALUE = 0,
  /**
   * Norm of the companion offset − t_D.
   */
  SMC_QUANTITY_COMPANION = 1,
} SmcQuantity;

/**
 * Status codes returned by every function.
 */
typedef enum SmcStatus {
  SMC_STATUS_OK = 0,
  SMC_STATUS_INVALID_ARGUMENT = 1,
  SMC_STATUS_DOMAIN = 2,
  SMC_STATUS_COLLISION = 3,
  SMC_STATUS_PRECISION = 4,
  SMC_STATUS_CALIBRATION = 5,
  SMC_STATUS_NULL_POINTER = 6,
  SMC_STATUS_INTERNAL = 7,
  SMC_STATUS_PANIC = 8,
} SmcStatus;

/**
 * Result of a norm computation.
 */
typedef struct SmcNorm SmcNorm;

/**
 * Rows of a norm table, ordered by |Δ|.
 */
typedef struct SmcTable SmcTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *smc_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer previously returned by this library.
 */
void smc_string_free(char *s);

/**
 * Computes the norms at the CM points of discriminant `disc` on X*_D.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum SmcStatus smc_norm_compute(uint64_t d, int64_t disc, struct SmcNorm **out);

/**
 * Releases a norm handle.
 *
 * # Safety
 * `h` must be null or a handle from [`smc_norm_compute`] not yet freed.
 */
void smc_norm_free(struct SmcNorm *h);

/**
 * Writes the factored norm as a newly allocated string, e.g. `2^2*5/3^4`.
 *
 * # Safety
 * `h` must be a live handle and `out` valid for writing.
 */
enum SmcStatus smc_norm_string(const struct SmcNorm *h, enum SmcQuantity which, char **out);

/**
 * Reads the exponent of the prime `p` in the factored norm (0 when absent).
 *
 * # Safety
 * `h` must be a live handle and `exponent` valid for writing.
 */
enum SmcStatus smc_norm_exponent(const struct SmcNorm *h,
                                 enum SmcQuantity which,
                                 uint64_t p,
                                 int64_t *exponent);

/**
 * Sign of the value (+1 or −1) and whether it was determined.
 *
 * # Safety
 * `h` must be a live handle; output pointers valid for writing.
 */
enum SmcStatus smc_norm_sign(const struct SmcNorm *h, int32_t *sign, bool *determined);

/**
 * Number of CM points in the orbit and the archimedean residual.
 *
 * # Safety
 * `h` must be a live handle; output pointers valid for writing.
 */
enum SmcStatus smc_norm_degree(const struct SmcNorm *h, uint64_t *degree, double *residual);

/**
 * The full result as a JSON document.
 *
 * # Safety
 * `h` must be a live handle and `out` valid for writing.
 */
enum SmcStatus smc_norm_json(const struct SmcNorm *h, char **out);

/**
 * Recomputes the normalization constant c_D; fails with
 * `SMC_STATUS_CALIBRATION` when it disagrees with the stored value.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum SmcStatus smc_calibrate(uint64_t d, char **out);

/**
 * Runs the built-in reference cases.
 *
 * # Safety
 * Output pointers must be valid for writing.
 */
enum SmcStatus smc_selfcheck(uint32_t *passed, uint32_t *total);

/**
 * Computes the norm table for fundamental discriminants with |d| ≤ `max_abs_d`.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum SmcStatus smc_table_compute(uint64_t d, int64_t max_abs_d, struct SmcTable **out);

/**
 * Releases a table handle.
 *
 * # Safety
 * `h` must be null or a handle from [`smc_table_compute`] not yet freed.
 */
void smc_table_free(struct SmcTable *h);

/**
 * Number of rows in a table.
 *
 * # Safety
 * `h` must be a live handle and `len` valid for writing.
 */
enum SmcStatus smc_table_len(const struct SmcTable *h, size_t *len);

/**
 * Discriminant of row `i` and a new handle to its result. A row whose
 * computation failed yields `SMC_STATUS_DOMAIN` with the row's flags as the
 * error message.
 *
 * # Safety
 * `h` must be a live handle; output pointers valid for writing.
 */
enum SmcStatus smc_table_row(const struct SmcTable *h,
                             size_t i,
                             int64_t *disc,
                             struct SmcNorm **out);

/**
 * Parses a factored rational such as `-2^3*7/5^2` and re-emits it in
 * canonical form; useful for comparing against stored values.
 *
 * # Safety
 * `s` must be a NUL-terminated string and `out` valid for writing.
 */
enum SmcStatus smc_canonical_factored(const char *s, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMCURVE_H */
