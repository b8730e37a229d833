#ifndef HARMAP_H
#define HARMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HarmapBehavior {
  HARMAP_BEHAVIOR_BVP_SOLUTION = 0,
  HARMAP_BEHAVIOR_BOUNDED_OSCILLATORY = 1,
  HARMAP_BEHAVIOR_DIVERGENT = 2,
  HARMAP_BEHAVIOR_INCONCLUSIVE = 3,
} HarmapBehavior;

typedef enum HarmapScheme {
  HARMAP_SCHEME_CONTINUE = 0,
  HARMAP_SCHEME_BLEND = 1,
  HARMAP_SCHEME_RAMP = 2,
} HarmapScheme;

/**
 * Status codes. Values 1 to 19 mirror the library's error kinds.
 */
typedef enum HarmapStatus {
  HARMAP_STATUS_OK = 0,
  HARMAP_STATUS_INVALID_PARAMS = 1,
  HARMAP_STATUS_DOMAIN = 2,
  HARMAP_STATUS_STEP_UNDERFLOW = 3,
  HARMAP_STATUS_DIVERGED = 4,
  HARMAP_STATUS_INSUFFICIENT_RANGE = 5,
  HARMAP_STATUS_INCONCLUSIVE = 6,
  HARMAP_STATUS_NO_SIGN_CHANGE = 7,
  HARMAP_STATUS_SEED_NOT_NEGATIVE = 8,
  HARMAP_STATUS_NOT_A_SOLUTION = 9,
  HARMAP_STATUS_ASYMMETRIC_DOMAIN = 10,
  HARMAP_STATUS_PROFILE_SINGULAR = 11,
  HARMAP_STATUS_MONOTONICITY_LOST = 12,
  HARMAP_STATUS_JOIN_MISMATCH = 13,
  HARMAP_STATUS_DERIVATIVE_VANISHES = 14,
  HARMAP_STATUS_SPLIT_WEIGHTS_INVALID = 15,
  HARMAP_STATUS_CONFIG = 16,
  HARMAP_STATUS_IO = 17,
  HARMAP_STATUS_CSV = 18,
  HARMAP_STATUS_JSON = 19,
  HARMAP_STATUS_NULL_POINTER = 100,
  HARMAP_STATUS_INVALID_UTF8 = 101,
  HARMAP_STATUS_PANIC = 102,
} HarmapStatus;

/**
 * A deformation together with the extension it was computed on.
 */
typedef struct HarmapDeformation HarmapDeformation;

/**
 * A warped-product metric.
 */
typedef struct HarmapMetric HarmapMetric;

/**
 * A two-sided shot.
 */
typedef struct HarmapShot HarmapShot;

/**
 * A certified symmetric solution.
 */
typedef struct HarmapSolution HarmapSolution;

/**
 * Scalar data of a solution: polished velocity, target index `k`,
 * `r(±∞)`, jump `W(+∞) - W(-∞)` and symmetry defect.
 */
typedef struct HarmapSolutionInfo {
  double v;
  int64_t k;
  int64_t j_pp;
  double r_minus;
  double r_plus;
  double w_jump;
  double defect;
} HarmapSolutionInfo;

/**
 * Options of [`harmap_deform`]. NaN `slope` and `window` take the scheme
 * defaults; null `weights` means the uniform split.
 */
typedef struct HarmapDeformOptions {
  double v;
  double epsilon;
  double horizon;
  enum HarmapScheme scheme;
  double slope;
  double window;
  const double *weights;
  size_t n_weights;
  double ivp_tol;
  bool literal_sign;
} HarmapDeformOptions;

/**
 * Scalar data of a deformation. `epsilon` is the join point actually used.
 */
typedef struct HarmapDeformationInfo {
  double epsilon;
  double horizon;
  double residual_max;
  double quad_error;
  double a_end;
  double a_max_abs;
  double t_of_max;
  double min_rate;
} HarmapDeformationInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *harmap_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *harmap_status_name(enum HarmapStatus status);

/**
 * Shoots from `P_j` with velocity `v`. `x_max <= 0` or NaN picks the range
 * from `precision`.
 */
enum HarmapStatus harmap_shoot(uint32_t g,
                               uint32_t m0,
                               uint32_t m1,
                               int32_t j,
                               double v,
                               double precision,
                               double x_max,
                               struct HarmapShot **out);

void harmap_shot_free(struct HarmapShot *shot);

/**
 * Behaviour of the shot; for `BvpSolution` also the lattice indices.
 */
enum HarmapStatus harmap_shot_behavior(const struct HarmapShot *shot,
                                       enum HarmapBehavior *behavior,
                                       int64_t *k_minus,
                                       int64_t *k_plus);

/**
 * Extrapolated `W(-∞)` and `W(+∞)` with their error bounds.
 */
enum HarmapStatus harmap_shot_limits(const struct HarmapShot *shot,
                                     double *w_minus,
                                     double *w_minus_err,
                                     double *w_plus,
                                     double *w_plus_err);

/**
 * Copies the samples `(x, r, r')`; returns their count, 0 for a null handle.
 */
size_t harmap_shot_samples(const struct HarmapShot *shot,
                           double *x,
                           double *r,
                           double *rp,
                           size_t cap);

/**
 * Critical velocities `l < u` of `P_j`. `v_seed` NaN uses the default seed.
 */
enum HarmapStatus harmap_find_critical_velocities(uint32_t g,
                                                  uint32_t m0,
                                                  uint32_t m1,
                                                  int32_t j,
                                                  double v_seed,
                                                  double tol,
                                                  double *l,
                                                  double *u);

/**
 * Certifies the symmetric solution through `P_j` near `v_critical`.
 */
enum HarmapStatus harmap_solve(uint32_t g,
                               uint32_t m0,
                               uint32_t m1,
                               int32_t j,
                               double v_critical,
                               struct HarmapSolution **out);

void harmap_solution_free(struct HarmapSolution *sol);

enum HarmapStatus harmap_solution_info(const struct HarmapSolution *sol,
                                       struct HarmapSolutionInfo *info);

/**
 * Copies the samples `(x, r, r')` of the shifted solution.
 */
size_t harmap_solution_samples(const struct HarmapSolution *sol,
                               double *x,
                               double *r,
                               double *rp,
                               size_t cap);

/**
 * Built-in metric by name: `flat_cone`, `smoothed` or `two_factor`.
 */
enum HarmapStatus harmap_metric_builtin(const char *name, struct HarmapMetric **out);

/**
 * Metric from configuration text, as read by `harmap deform --config`.
 * Relative table paths resolve against the current directory.
 */
enum HarmapStatus harmap_metric_parse(const char *text, struct HarmapMetric **out);

void harmap_metric_free(struct HarmapMetric *metric);

/**
 * Number of warping factors including `f₀`; 0 for a null handle.
 */
size_t harmap_metric_factor_count(const struct HarmapMetric *metric);

/**
 * Defaults: `v = 0.5`, `epsilon = 0.5`, `horizon = 10`, blend, uniform
 * split, `ivp_tol = 1e-10`.
 */
struct HarmapDeformOptions harmap_deform_options_default(void);

enum HarmapStatus harmap_deform(const struct HarmapMetric *metric,
                                const struct HarmapDeformOptions *opts,
                                struct HarmapDeformation **out);

void harmap_deformation_free(struct HarmapDeformation *d);

enum HarmapStatus harmap_deformation_info(const struct HarmapDeformation *d,
                                          struct HarmapDeformationInfo *info);

/**
 * Copies the grid `t`, `r`, `A` and the harmonicity residual.
 */
size_t harmap_deformation_grid(const struct HarmapDeformation *d,
                               double *t,
                               double *r,
                               double *a,
                               double *residual,
                               size_t cap);

/**
 * Copies `α_i` on the grid, `i = 0` for the cone factor.
 */
size_t harmap_deformation_alpha(const struct HarmapDeformation *d,
                                size_t i,
                                double *out,
                                size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARMAP_H */
