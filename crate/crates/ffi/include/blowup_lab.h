#ifndef BLOWUP_LAB_H
#define BLOWUP_LAB_H

/* This file is generated by cbindgen from blowup-lab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum {
  BLAB_STATUS_OK = 0,
  BLAB_STATUS_INVALID_ARGUMENT = 1,
  BLAB_STATUS_UNSUPPORTED = 2,
  BLAB_STATUS_NO_CONVERGENCE = 3,
  BLAB_STATUS_NUMERICAL = 4,
} BlabStatus;

// Trajectory classification codes for `blab_gf_classify`.
typedef enum {
  BLAB_VERDICT_DIVERGING = 0,
  BLAB_VERDICT_CONVERGED = 1,
  BLAB_VERDICT_UNDECIDED = 2,
} BlabVerdict;

typedef struct BlabKind BlabKind;

typedef struct BlabParams BlabParams;

typedef struct BlabTarget BlabTarget;

// Summary statistics of a gradient-flow run.
typedef struct {
  BlabVerdict verdict;
  double initial_risk;
  double final_risk;
  double final_grad_norm;
  double final_param_norm;
  double norm_trend_slope;
  size_t samples;
} BlabGfSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent error on this thread, or NULL when no
// error has occurred. The pointer stays valid until the next failing call.
const char *blab_last_error_message(void);

// Parse an activation-kind string (`"relu"`, `"leaky_relu:0.1"`,
// `"isru:1.5"`, ...). Returns NULL on failure.
//
// # Safety
// `spec` must be a valid NUL-terminated string.
BlabKind *blab_kind_parse(const char *spec);

// # Safety
// `kind` must come from `blab_kind_parse` and not have been freed.
void blab_kind_free(BlabKind *kind);

// Evaluate the activation at `x`.
//
// # Safety
// `kind` and `out` must be valid pointers.
BlabStatus blab_kind_eval(const BlabKind *kind, double x, double *out);

// Derivative of the activation at `x` (left one-sided at kinks).
//
// # Safety
// `kind` and `out` must be valid pointers.
BlabStatus blab_kind_derivative(const BlabKind *kind, double x, double *out);

// Build a parameter vector from its `3h + 1` flat entries.
//
// # Safety
// `values` must point to `len` readable doubles.
BlabParams *blab_params_new(size_t h, const double *values, size_t len);

// Instantiate an explicit family member (`"relu_indicator"`, ...) at index
// `n`, width `h`, on `[lo, hi]`.
//
// # Safety
// `family` must be a valid NUL-terminated string.
BlabParams *blab_params_from_family(const char *family, uint32_t n, double lo, double hi, size_t h);

// # Safety
// `params` must come from a `blab_params_*` constructor.
void blab_params_free(BlabParams *params);

// Number of flat entries (`3h + 1`).
//
// # Safety
// `params` must be a valid handle.
size_t blab_params_dim(const BlabParams *params);

// Parse a target string (`"indicator"`, `"square"`, `"poly:1,-2"`, ...).
//
// # Safety
// `spec` must be a valid NUL-terminated string.
BlabTarget *blab_target_parse(const char *spec);

// # Safety
// `target` must come from `blab_target_parse`.
void blab_target_free(BlabTarget *target);

// Realization value at `x`.
//
// # Safety
// All pointers must be valid.
BlabStatus blab_realize(const BlabParams *params, const BlabKind *kind, double x, double *out);

// Risk over `[lo, hi]`: exact for rectified power members, adaptive
// quadrature at tolerance `tol` otherwise. `est_error` may be NULL.
//
// # Safety
// All non-NULL pointers must be valid.
BlabStatus blab_risk(const BlabParams *params,
                     const BlabKind *kind,
                     const BlabTarget *target,
                     double lo,
                     double hi,
                     double tol,
                     double *out,
                     double *est_error);

// Generalized risk gradient; `out` must hold `3h + 1` doubles.
//
// # Safety
// All pointers must be valid and `out_len` must equal the parameter
// dimension.
BlabStatus blab_gradient(const BlabParams *params,
                         const BlabKind *kind,
                         const BlabTarget *target,
                         double lo,
                         double hi,
                         double *out,
                         size_t out_len);

// Integrate the gradient flow from `params` for time `t_end` and classify
// the run against `eps_floor`.
//
// # Safety
// All pointers must be valid.
BlabStatus blab_gf_classify(const BlabParams *params,
                            const BlabKind *kind,
                            const BlabTarget *target,
                            double lo,
                            double hi,
                            double t_end,
                            double eps_floor,
                            BlabGfSummary *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BLOWUP_LAB_H */
