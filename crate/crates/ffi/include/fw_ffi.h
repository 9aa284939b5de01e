#ifndef FW_FFI_H
#define FW_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Return codes of every fallible function.
 */
typedef enum FwStatus {
  FW_STATUS_OK = 0,
  FW_STATUS_NULL_POINTER = 1,
  FW_STATUS_INVALID_ARGUMENT = 2,
  FW_STATUS_DIMENSION_MISMATCH = 3,
  FW_STATUS_INVALID_DOMAIN = 4,
  FW_STATUS_INVALID_OBJECTIVE = 5,
  FW_STATUS_SOLVER_ERROR = 6,
  FW_STATUS_UNAVAILABLE = 7,
  FW_STATUS_PANIC = 8,
} FwStatus;

typedef enum FwVariant {
  FW_VARIANT_FW = 0,
  FW_VARIANT_AFW = 1,
  FW_VARIANT_PFW = 2,
  FW_VARIANT_FCFW = 3,
  FW_VARIANT_MNP = 4,
} FwVariant;

/**
 * Termination reason of a finished solve.
 */
typedef enum FwSolveStatus {
  FW_SOLVE_STATUS_CONVERGED = 0,
  FW_SOLVE_STATUS_MAX_ITER = 1,
  FW_SOLVE_STATUS_STALLED = 2,
  FW_SOLVE_STATUS_NON_FINITE = 3,
} FwSolveStatus;

/**
 * A quadratic objective together with its domain.
 */
typedef struct FwProblem FwProblem;

/**
 * The outcome of [`fw_solve`].
 */
typedef struct FwResult FwResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null if there was none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *fw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fw_version(void);

/**
 * Creates `f(x) = ½ xᵀQx + bᵀx + c` over the domain described by `domain_json`.
 *
 * `q` is `dim × dim` in row-major order and `b` has `dim` entries. The domain JSON
 * uses the same format as experiment configs, e.g. `{"variant":"simplex","dim":3}`.
 *
 * # Safety
 * `q`, `b` must point to `dim*dim` and `dim` readable doubles, `domain_json` to a
 * NUL-terminated string, and `out` to writable storage for one pointer.
 */
enum FwStatus fw_problem_new_quadratic(size_t dim,
                                       const double *q,
                                       const double *b,
                                       double c,
                                       const char *domain_json,
                                       struct FwProblem **out);

/**
 * Creates `f(x) = ½‖x − center‖²` over the domain described by `domain_json`.
 *
 * # Safety
 * `center` must point to `dim` readable doubles; see [`fw_problem_new_quadratic`].
 */
enum FwStatus fw_problem_new_squared_distance(size_t dim,
                                              const double *center,
                                              const char *domain_json,
                                              struct FwProblem **out);

/**
 * Releases a problem. Null is ignored.
 *
 * # Safety
 * `p` must come from a `fw_problem_new_*` call and not have been freed.
 */
void fw_problem_free(struct FwProblem *p);

/**
 * Dimension of the problem, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t fw_problem_dim(const struct FwProblem *p);

/**
 * Runs a solver from the default start until the FW gap is at most `epsilon` or
 * `max_iter` steps were taken. Not converging is not an error; inspect
 * [`fw_result_status`].
 *
 * # Safety
 * `p` must be a live problem handle and `out` writable storage for one pointer.
 */
enum FwStatus fw_solve(const struct FwProblem *p,
                       enum FwVariant variant,
                       double epsilon,
                       size_t max_iter,
                       struct FwResult **out);

/**
 * Releases a result. Null is ignored.
 *
 * # Safety
 * `r` must come from [`fw_solve`] and not have been freed.
 */
void fw_result_free(struct FwResult *r);

/**
 * # Safety
 * `r` must be a live result handle and `out` writable.
 */
enum FwStatus fw_result_status(const struct FwResult *r, enum FwSolveStatus *out);

/**
 * Number of steps taken, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t fw_result_iterations(const struct FwResult *r);

/**
 * Final objective value and FW gap.
 *
 * # Safety
 * `r` must be a live result handle; `value` and `gap` must be writable.
 */
enum FwStatus fw_result_value_gap(const struct FwResult *r, double *value, double *gap);

/**
 * Copies the final iterate into `buf`, which must hold at least `len ≥ dim` doubles.
 *
 * # Safety
 * `r` must be a live result handle and `buf` writable for `len` doubles.
 */
enum FwStatus fw_result_x(const struct FwResult *r, double *buf, size_t len);

/**
 * The trace as CSV text. Release the string with [`fw_string_free`].
 *
 * # Safety
 * `r` must be a live result handle and `out` writable storage for one pointer.
 */
enum FwStatus fw_result_trace_csv(const struct FwResult *r, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fw_string_free(char *s);

/**
 * Pyramidal width estimate of `n` points of dimension `dim`, stored row-major.
 *
 * # Safety
 * `points` must hold `n*dim` readable doubles and `out` must be writable.
 */
enum FwStatus fw_pwidth(const double *points,
                        size_t n,
                        size_t dim,
                        size_t n_directions,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FW_FFI_H */
