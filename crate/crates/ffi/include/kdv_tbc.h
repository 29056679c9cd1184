#ifndef KDV_TBC_H
#define KDV_TBC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KdvStatus {
  KDV_STATUS_OK = 0,
  KDV_STATUS_NULL_POINTER = 1,
  KDV_STATUS_INVALID_INPUT = 2,
  KDV_STATUS_DEGENERATE_ROOT = 3,
  KDV_STATUS_NON_SEPARATED = 4,
  KDV_STATUS_TRACKING_AMBIGUITY = 5,
  KDV_STATUS_SEPARATION_VIOLATION = 6,
  KDV_STATUS_NON_REAL_RESULT = 7,
  KDV_STATUS_PADE_SINGULAR = 8,
  KDV_STATUS_POLE_INSIDE_DISK = 9,
  KDV_STATUS_REPEATED_POLE = 10,
  KDV_STATUS_BANDWIDTH_VIOLATION = 11,
  KDV_STATUS_SINGULAR_SYSTEM = 12,
  KDV_STATUS_OUT_OF_RANGE = 13,
  KDV_STATUS_QUADRATURE_NO_CONVERGENCE = 14,
  KDV_STATUS_ZERO_REFERENCE_NORM = 15,
  KDV_STATUS_CONFIG = 16,
  KDV_STATUS_IO = 17,
  KDV_STATUS_CACHE = 18,
  KDV_STATUS_FINISHED = 19,
  KDV_STATUS_PANIC = 20,
} KdvStatus;

typedef enum KdvScheme {
  /**
   * One-sided scheme, `U1 = 0` only.
   */
  KDV_SCHEME_RCN = 0,
  /**
   * Centered scheme.
   */
  KDV_SCHEME_CCN = 1,
} KdvScheme;

typedef enum KdvInitial {
  /**
   * `exp(-x^2)`.
   */
  KDV_INITIAL_GAUSSIAN = 0,
  /**
   * `exp(-8 (x - 5)^2) sin(50 pi x / 4)`.
   */
  KDV_INITIAL_WAVE_PACKET = 1,
} KdvInitial;

/**
 * Opaque problem definition.
 */
typedef struct KdvProblem KdvProblem;

/**
 * Opaque time stepper.
 */
typedef struct KdvSolver KdvSolver;

typedef struct KdvProblemParams {
  double u1;
  double u2;
  double a;
  double b;
  double t_final;
  size_t j;
  size_t n_steps;
  double radius;
  /**
   * A [`KdvScheme`] value.
   */
  uint32_t scheme;
  /**
   * A [`KdvInitial`] value.
   */
  uint32_t initial;
} KdvProblemParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length, 0 if none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t kdv_last_error_message(char *buf, size_t len);

/**
 * Static name of a status code, `"unknown"` for values outside the enum.
 */
const char *kdv_status_name(int32_t status);

/**
 * Parameters of the first benchmark (Gaussian on `[-6, 6]`, `T = 4`);
 * `scheme` is a [`KdvScheme`] value, checked by [`kdv_problem_new`].
 */
struct KdvProblemParams kdv_example1_params(uint32_t scheme, size_t j, size_t n_steps);

/**
 * Parameters of the second benchmark (wave packet on `[0, 10]`, centered scheme).
 */
struct KdvProblemParams kdv_example2_params(size_t j, size_t n_steps);

/**
 * Validates `params` and stores a new problem handle in `*out`.
 *
 * # Safety
 * `params` and `out` must be null or valid pointers.
 */
enum KdvStatus kdv_problem_new(const struct KdvProblemParams *params, struct KdvProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`kdv_problem_new`] not yet freed.
 */
void kdv_problem_free(struct KdvProblem *problem);

/**
 * Builds kernels, factors the system and stores a solver in `*out`. With
 * `fast` set, boundary convolutions use `terms` exponentials past the first
 * `head` exact coefficients.
 *
 * # Safety
 * `problem` must be a live problem handle; `out` must be valid for writes.
 */
enum KdvStatus kdv_solver_new(const struct KdvProblem *problem,
                              bool fast,
                              size_t terms,
                              size_t head,
                              struct KdvSolver **out);

/**
 * # Safety
 * `solver` must be null or a handle from [`kdv_solver_new`] not yet freed.
 */
void kdv_solver_free(struct KdvSolver *solver);

/**
 * Advances one step; [`KdvStatus::Finished`] once the final step is reached.
 *
 * # Safety
 * `solver` must be a live solver handle.
 */
enum KdvStatus kdv_solver_step(struct KdvSolver *solver);

/**
 * Current step index, 0 for a null handle.
 *
 * # Safety
 * `solver` must be null or a live solver handle.
 */
size_t kdv_solver_step_index(const struct KdvSolver *solver);

/**
 * Current time, NaN for a null handle.
 *
 * # Safety
 * `solver` must be null or a live solver handle.
 */
double kdv_solver_time(const struct KdvSolver *solver);

/**
 * Number of grid values (`J + 1`), 0 for a null handle.
 *
 * # Safety
 * `solver` must be null or a live solver handle.
 */
size_t kdv_solver_len(const struct KdvSolver *solver);

/**
 * Copies the current grid values into `buf`, which must hold
 * [`kdv_solver_len`] doubles.
 *
 * # Safety
 * `solver` must be a live solver handle and `buf` valid for `len` writes.
 */
enum KdvStatus kdv_solver_copy_u(const struct KdvSolver *solver, double *buf, size_t len);

/**
 * Airy function `Ai(x)` for `|x| <= 100`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KdvStatus kdv_airy(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KDV_TBC_H */
