/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FREEBOUND_H
#define FREEBOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  FbOk = 0,
  /**
   * Null pointer or non-UTF-8 string argument.
   */
  FbNullArgument = 1,
  /**
   * Parameters or input files rejected before any computation.
   */
  FbInvalidInput = 2,
  /**
   * A numerical method failed to converge or a check did not hold.
   */
  FbNumericalFailure = 3,
  /**
   * The run finished but some sweep steps or acceptance checks failed.
   */
  FbPartial = 4,
  FbPanic = 5,
} FbStatus;

/**
 * Barrier data for a fixed `λ₀`, `δ` and `l₀`.
 */
typedef struct FbBarrier FbBarrier;

/**
 * Axisymmetric meridian domain.
 */
typedef struct FbDomain FbDomain;

/**
 * Problem parameters `(N, α, β, λ)`.
 */
typedef struct FbProblem FbProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fb_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
FbStatus fb_problem_new(uint32_t dim, double alpha, double beta, double lambda, FbProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from [`fb_problem_new`] not yet freed.
 */
void fb_problem_free(FbProblem *p);

/**
 * Whether the exponents satisfy the admissibility inequality.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_problem_admissible(const FbProblem *p, bool *out);

/**
 * Free-boundary radius `R_λ` of the flat-hat radial solution.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_support_radius(const FbProblem *p, double *radius, double *center_value);

/**
 * `λ*` for a ball of the given radius, by scaling from the flat hat at the
 * problem's `λ`.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_lambda_star(const FbProblem *p, double ball_radius, double *out);

/**
 * Barrier with `δ = delta_factor · s*(λ₀)`.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_barrier_new(const FbProblem *p,
                        double lambda0,
                        double delta_factor,
                        double l0,
                        FbBarrier **out);

/**
 * # Safety
 * `b` must be null or a handle from [`fb_barrier_new`] not yet freed.
 */
void fb_barrier_free(FbBarrier *b);

/**
 * Writes `δ`, `C` and `l₁`; any output may be null.
 *
 * # Safety
 * `b` must be a valid handle; non-null outputs must be writable.
 */
FbStatus fb_barrier_constants(const FbBarrier *b, double *delta, double *edge_constant, double *l1);

/**
 * The barrier profile `w(r)`, zero for `r ≥ C`.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_barrier_w(const FbBarrier *b, double r, double *out);

/**
 * The shifted barrier `v = w(|x| - l₀)` at `|x| ≥ l₀`.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_barrier_v(const FbBarrier *b, double x_radius, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
FbStatus fb_domain_ball(double radius, FbDomain **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
FbStatus fb_domain_dumbbell(double r_cyl, double l_total, double fillet_length, FbDomain **out);

/**
 * # Safety
 * `d` must be null or a handle from `fb_domain_*` not yet freed.
 */
void fb_domain_free(FbDomain *d);

/**
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_domain_contains(const FbDomain *d, double rho, double z, bool *out);

/**
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_domain_total_length(const FbDomain *d, double *out);

/**
 * Inradius by a distance transform on a grid of spacing `grid_h`.
 *
 * # Safety
 * Handle and output pointers must be valid.
 */
FbStatus fb_domain_inradius(const FbDomain *d, double grid_h, double *out);

/**
 * Runs one pipeline command (`radial`, `domain`, `solve`, `analyze` or
 * `verify`) into `out_dir`. `config_path` may be null for the defaults.
 *
 * # Safety
 * String arguments must be null or NUL-terminated.
 */
FbStatus fb_run_command(const char *command, const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FREEBOUND_H */
