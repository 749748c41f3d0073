#ifndef MEANFIELD_H
#define MEANFIELD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_POINTER = 1,
  MF_STATUS_INVALID_ARGUMENT = 2,
  MF_STATUS_OUTSIDE_REGION = 3,
  MF_STATUS_NUMERICAL = 4,
  MF_STATUS_NOT_CONVERGED = 5,
  MF_STATUS_PANIC = 6,
} MfStatus;

/**
 * A zero-mean grid function.
 */
typedef struct MfField MfField;

/**
 * A uniform `n × n` grid on the unit torus.
 */
typedef struct MfGrid MfGrid;

/**
 * A finished minimax solve with its refinement.
 */
typedef struct MfSolveResult MfSolveResult;

typedef struct MfEnergy {
  /**
   * `½∫|∇u|²`
   */
  double dirichlet;
  /**
   * `ln ∫ e^u`
   */
  double g_plus;
  /**
   * `ln ∫ e^{−u}`
   */
  double g_minus;
  double total;
} MfEnergy;

typedef struct MfRegion {
  bool in_region;
  double margin;
} MfRegion;

/**
 * Fitted slopes against `ln(1/ε)`.
 */
typedef struct MfSlopes {
  double dirichlet;
  double ln_exp_plus;
  double ln_exp_minus;
  double energy;
} MfSlopes;

/**
 * Minimax settings; seeds are the library defaults.
 */
typedef struct MfSolveOptions {
  size_t nodes;
  size_t max_iters;
  double step0;
  double grad_tol;
  double band;
  size_t reparam_every;
  double tol_residual;
} MfSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mf_version(void);

/**
 * Message for the last failed call on this thread, or null after a
 * successful call. Valid until the next call on the same thread.
 */
const char *mf_last_error(void);

/**
 * Static description of a status code; unknown codes get a generic text.
 */
const char *mf_status_str(int32_t status);

/**
 * # Safety
 * `out_grid` must be writable.
 */
enum MfStatus mf_grid_new(size_t n, struct MfGrid **out_grid);

/**
 * # Safety
 * `grid` must be null or a handle from [`mf_grid_new`] not yet freed.
 */
void mf_grid_free(struct MfGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle.
 */
size_t mf_grid_n(const struct MfGrid *grid);

/**
 * First nonzero eigenvalue of `−Δ` on the grid.
 *
 * # Safety
 * `grid` must be a live handle and `out_value` writable.
 */
enum MfStatus mf_first_eigenvalue(const struct MfGrid *grid, double *out_value);

/**
 * A field from `n²` row-major samples, `values[i*n + j] = u(i/n, j/n)`.
 * The mean is subtracted.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out_field` be writable.
 */
enum MfStatus mf_field_new(const struct MfGrid *grid,
                           const double *values,
                           size_t len,
                           struct MfField **out_field);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void mf_field_free(struct MfField *field);

/**
 * Number of samples, `n²`.
 *
 * # Safety
 * `field` must be a live handle.
 */
size_t mf_field_len(const struct MfField *field);

/**
 * Copies the samples into `buffer`, which must hold exactly
 * [`mf_field_len`] doubles.
 *
 * # Safety
 * `buffer` must point to `len` writable doubles.
 */
enum MfStatus mf_field_copy_values(const struct MfField *field, double *buffer, size_t len);

/**
 * # Safety
 * `field` must be a live handle and `out_energy` writable.
 */
enum MfStatus mf_energy(const struct MfField *field,
                        double lambda1,
                        double lambda2,
                        struct MfEnergy *out_energy);

/**
 * L² norm of the equation residual.
 *
 * # Safety
 * `field` must be a live handle and `out_value` writable.
 */
enum MfStatus mf_residual_norm(const struct MfField *field,
                               double lambda1,
                               double lambda2,
                               double *out_value);

/**
 * # Safety
 * `out_region` must be writable.
 */
enum MfStatus mf_in_region(double lambda1, double lambda2, struct MfRegion *out_region);

/**
 * Least total mass `m1 + m2` of a two-sided blow-up point.
 */
double mf_two_sided_threshold(void);

/**
 * Bubble slopes at the torus centre over `count` strictly decreasing scales.
 *
 * # Safety
 * `eps` must point to `count` readable doubles and `out_slopes` be writable.
 */
enum MfStatus mf_expansion_slopes(const struct MfGrid *grid,
                                  double r0,
                                  double lambda1,
                                  double lambda2,
                                  const double *eps,
                                  size_t count,
                                  struct MfSlopes *out_slopes);

struct MfSolveOptions mf_solve_options_default(void);

/**
 * Minimax and refinement. `options` may be null for the defaults.
 *
 * Returns [`MfStatus::NotConverged`] with a valid result handle when the
 * refinement misses `tol_residual`; the handle must still be freed.
 *
 * # Safety
 * `grid` must be a live handle, `options` null or readable and
 * `out_result` writable.
 */
enum MfStatus mf_solve(const struct MfGrid *grid,
                       double lambda1,
                       double lambda2,
                       const struct MfSolveOptions *options,
                       struct MfSolveResult **out_result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
void mf_solve_result_free(struct MfSolveResult *result);

/**
 * Minimax level estimate; NaN for a null handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
double mf_solve_result_c_est(const struct MfSolveResult *result);

/**
 * Deformation sweeps performed.
 *
 * # Safety
 * `result` must be a live handle.
 */
size_t mf_solve_result_sweeps(const struct MfSolveResult *result);

/**
 * Whether the path deformation met its gradient tolerance.
 *
 * # Safety
 * `result` must be a live handle.
 */
bool mf_solve_result_minimax_converged(const struct MfSolveResult *result);

/**
 * L² residual of the refined solution; NaN for a null handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
double mf_solve_result_residual(const struct MfSolveResult *result);

/**
 * A new field handle holding the refined solution.
 *
 * # Safety
 * `result` must be a live handle and `out_field` writable.
 */
enum MfStatus mf_solve_result_field(const struct MfSolveResult *result, struct MfField **out_field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEANFIELD_H */
