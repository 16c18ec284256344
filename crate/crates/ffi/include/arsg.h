#ifndef ARSG_H
#define ARSG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArsgKind {
  ARSG_KIND_SGD0 = 0,
  ARSG_KIND_HB = 1,
  ARSG_KIND_NAG = 2,
  ARSG_KIND_RSG = 3,
  ARSG_KIND_RSG_PRACTICAL = 4,
  ARSG_KIND_AMSGRAD = 5,
  ARSG_KIND_ARSG = 6,
} ArsgKind;

/**
 * Shape of an iteration-dependent coefficient.
 */
typedef enum ArsgSchedule {
  ARSG_SCHEDULE_CONSTANT = 0,
  /**
   * `base / sqrt(t)`
   */
  ARSG_SCHEDULE_INV_SQRT = 1,
  /**
   * `base / t`
   */
  ARSG_SCHEDULE_INV = 2,
  /**
   * `base / t^2`
   */
  ARSG_SCHEDULE_INV_SQUARE = 3,
} ArsgSchedule;

typedef enum ArsgStatus {
  ARSG_STATUS_OK = 0,
  ARSG_STATUS_NULL_POINTER = 1,
  ARSG_STATUS_INVALID_ARGUMENT = 2,
  ARSG_STATUS_DIMENSION_MISMATCH = 3,
  ARSG_STATUS_NON_FINITE = 4,
  ARSG_STATUS_PRECONDITION = 5,
  ARSG_STATUS_DIVERGENT = 6,
  ARSG_STATUS_PANIC = 7,
} ArsgStatus;

/**
 * Opaque optimizer handle.
 */
typedef struct ArsgOptimizer ArsgOptimizer;

/**
 * Schedule fields hold `ArsgSchedule` values.
 */
typedef struct ArsgHyper {
  double alpha;
  uint32_t alpha_schedule;
  double beta1;
  uint32_t beta1_schedule;
  double beta2;
  double mu;
  double epsilon;
} ArsgHyper;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *arsg_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *arsg_last_error(void);

/**
 * Hyper-parameters with constant schedules and the given values.
 */
struct ArsgHyper arsg_hyper_constant(double alpha,
                                     double beta1,
                                     double beta2,
                                     double mu,
                                     double epsilon);

/**
 * Creates an optimizer of kind `kind_id` (an `ArsgKind` value) at `x0`
 * (length `dim`) and stores the handle in `*out_handle`.
 *
 * # Safety
 * `hyper` must point to a valid `ArsgHyper`, `x0` to `dim` readable doubles
 * and `out_handle` to writable storage for one pointer.
 */
enum ArsgStatus arsg_optimizer_new(uint32_t kind_id,
                                   const struct ArsgHyper *hyper,
                                   const double *x0,
                                   size_t dim,
                                   struct ArsgOptimizer **out_handle);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `opt` must be NULL or a handle from [`arsg_optimizer_new`] not yet freed.
 */
void arsg_optimizer_free(struct ArsgOptimizer *opt);

/**
 * Restricts the iterates of an adaptive optimizer to `[lower, upper]`; the
 * current point is clamped into the box.
 *
 * # Safety
 * `opt` must be a live handle, `lower` and `upper` must each point to `dim` doubles.
 */
enum ArsgStatus arsg_optimizer_set_box(struct ArsgOptimizer *opt,
                                       const double *lower,
                                       const double *upper,
                                       size_t dim);

/**
 * Applies one step with gradient `grad` (length `dim`).
 *
 * # Safety
 * `opt` must be a live handle and `grad` must point to `dim` doubles.
 */
enum ArsgStatus arsg_optimizer_step(struct ArsgOptimizer *opt, const double *grad, size_t dim);

/**
 * Copies the current iterate into `out_params` (length `dim`).
 *
 * # Safety
 * `opt` must be a live handle and `out_params` must point to `dim` writable doubles.
 */
enum ArsgStatus arsg_optimizer_params(const struct ArsgOptimizer *opt,
                                      double *out_params,
                                      size_t dim);

/**
 * Writes the dimension of the iterate to `*out_dim`.
 *
 * # Safety
 * `opt` must be a live handle and `out_dim` writable.
 */
enum ArsgStatus arsg_optimizer_dim(const struct ArsgOptimizer *opt, size_t *out_dim);

/**
 * Writes the 1-based index of the next step to `*out_t`.
 *
 * # Safety
 * `opt` must be a live handle and `out_t` writable.
 */
enum ArsgStatus arsg_optimizer_iteration(const struct ArsgOptimizer *opt, uint64_t *out_t);

/**
 * Eigenvalues of the gain matrix as `[re1, im1, re2, im2]`.
 *
 * # Safety
 * `out_roots` must point to 4 writable doubles.
 */
enum ArsgStatus arsg_eigenvalues(double beta, double mu, double tau, double *out_roots);

/**
 * Gain factor `max(|r1|, |r2|)` at `(beta, mu, tau)`.
 *
 * # Safety
 * `out_gain` must be writable.
 */
enum ArsgStatus arsg_gain_factor(double beta, double mu, double tau, double *out_gain);

/**
 * Stationary variance of the error along one direction with `tau = alpha * lambda`.
 *
 * # Safety
 * `out_var` must be writable.
 */
enum ArsgStatus arsg_stationary_variance(double beta,
                                         double mu,
                                         double tau,
                                         double alpha,
                                         double sigma,
                                         double *out_var);

/**
 * Predicted worst-case rate of RSG with exact gradients.
 *
 * # Safety
 * `out_rate` must be writable.
 */
enum ArsgStatus arsg_theorem1_rate(double kappa,
                                   double c_alpha,
                                   double c_beta,
                                   double c_mu,
                                   double *out_rate);

/**
 * Minimizer of the gain factor over `tau` in `[tau_lo, tau_hi]`.
 *
 * # Safety
 * `out_tau` and `out_gain` must be writable.
 */
enum ArsgStatus arsg_argmin_gain(double beta,
                                 double mu,
                                 double tau_lo,
                                 double tau_hi,
                                 double *out_tau,
                                 double *out_gain);

/**
 * Step-size factor applied when the observation factor doubles from `mu`.
 *
 * # Safety
 * `out_factor` must be writable.
 */
enum ArsgStatus arsg_obsb_alpha_factor(double beta1,
                                       double mu,
                                       double tau_lo,
                                       double tau_hi,
                                       double *out_factor);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARSG_H */
