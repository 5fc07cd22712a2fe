#ifndef EMBEDDED_SPECTRA_H
#define EMBEDDED_SPECTRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Coefficient family for [`es_coeff_eval`].
typedef enum EsCoeffKind {
  ES_COEFF_KIND_UPPER_F = 0,
  ES_COEFF_KIND_UPPER_G = 1,
  ES_COEFF_KIND_LOWER_F = 2,
  ES_COEFF_KIND_LOWER_G = 3,
} EsCoeffKind;

typedef enum EsStatus {
  ES_STATUS_OK = 0,
  ES_STATUS_NULL_POINTER = 1,
  // Malformed argument: bad UTF-8, unparsable rational, out-of-range number.
  ES_STATUS_INVALID_ARGUMENT = 2,
  ES_STATUS_INVALID_SPEC = 3,
  ES_STATUS_NOT_IN_RESONANCE_SHELL = 4,
  ES_STATUS_NON_GENERIC = 5,
  ES_STATUS_INFEASIBLE = 6,
  // The value sits on a pole of the coefficient.
  ES_STATUS_POLE = 7,
  ES_STATUS_STEP_FAILURE = 8,
  ES_STATUS_NON_CONVERGENCE = 9,
  ES_STATUS_BRACKET_FAILURE = 10,
  ES_STATUS_WINDOW_TOO_SHORT = 11,
  ES_STATUS_NOT_FOUND = 12,
  ES_STATUS_IO = 13,
  // A Rust panic was caught at the boundary.
  ES_STATUS_INTERNAL = 14,
} EsStatus;

// Exact coefficient engine with its memo table.
typedef struct EsEngine EsEngine;

// A potential with its resolved description and construction plan.
typedef struct EsPotential EsPotential;

// An integrated trajectory, together with the recorded phase profile of
// construction runs.
typedef struct EsTrajectory EsTrajectory;

// One trajectory sample; `xi` and `psi` are NaN outside construction runs.
typedef struct EsSample {
  double x;
  double theta;
  double log_r;
  double xi;
  double psi;
} EsSample;

typedef struct EsVerification {
  double psi_inf;
  double target_psi;
  double b;
  double lambda_abs;
  double ratio;
  bool psi_locked;
  bool decay_rate;
  bool slope_residual;
} EsVerification;

typedef struct EsDetection {
  // Boundary angle in `[0, pi)`.
  double theta_boundary;
  double b;
} EsDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *es_last_error(void);

// Library version as a static NUL-terminated string.
const char *es_version(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void es_string_free(char *s);

// Candidate energies of the phase set `phases` (comma-separated rationals)
// at order `p`, as JSON.
//
// # Safety
// `phases` must be a NUL-terminated string; `out_json` must be writable.
enum EsStatus es_resonance_set_json(const char *phases, size_t p, char **out_json);

// Engine evaluating coefficients up to order `cap`; 0 selects the default.
struct EsEngine *es_engine_new(size_t cap);

// # Safety
// `engine` must be null or a handle from [`es_engine_new`], not yet freed.
void es_engine_free(struct EsEngine *engine);

// Exact value of a coefficient at `eta` and comma-separated `phases`
// (`order` of them; null means all zero). The exact rational goes to
// `out_exact` (may be null) and its nearest double to `out_value`.
// Returns [`EsStatus::Pole`] on a nonremovable singularity.
//
// # Safety
// `engine` must be a live handle; string arguments NUL-terminated.
enum EsStatus es_coeff_eval(const struct EsEngine *engine,
                            enum EsCoeffKind kind,
                            size_t order,
                            size_t harmonic,
                            const char *eta,
                            const char *phases,
                            double *out_value,
                            char **out_exact);

// Parses a JSON potential description, resolves a `"constraint"`
// amplitude and computes the construction plan.
//
// # Safety
// `json` must be NUL-terminated; `out_potential` must be writable.
enum EsStatus es_potential_build(const char *json, struct EsPotential **out_potential);

// # Safety
// `potential` must be null or a handle from [`es_potential_build`], not yet freed.
void es_potential_free(struct EsPotential *potential);

// `V(x)` with the aggregate phase frozen at `xi`.
//
// # Safety
// `potential` must be a live handle; `out_value` writable.
enum EsStatus es_potential_value(const struct EsPotential *potential,
                                 double x,
                                 double xi,
                                 double *out_value);

// The construction plan as JSON.
//
// # Safety
// `potential` must be a live handle; `out_json` writable.
enum EsStatus es_potential_plan_json(const struct EsPotential *potential, char **out_json);

// Forward Prüfer run from `x0` to `x_max` with the phase frozen at 0 and
// `theta(x0) = theta0`, sampled on a logarithmic mesh.
//
// # Safety
// `potential` must be a live handle; `out_trajectory` writable.
enum EsStatus es_simulate_forward(const struct EsPotential *potential,
                                  double theta0,
                                  double x_max,
                                  size_t samples,
                                  double tol,
                                  struct EsTrajectory **out_trajectory);

// Phase-locked construction: shoots `xi(x0)` on a `grid`-point circle mesh
// to within `shoot_tol` of the target limit, then integrates the coupled
// system. Requires a plan with a dynamic phase.
//
// # Safety
// `potential` must be a live handle; `out_trajectory` writable;
// `out_xi0` may be null.
enum EsStatus es_construct(const struct EsPotential *potential,
                           double x_max,
                           size_t samples,
                           double tol,
                           size_t grid,
                           double shoot_tol,
                           double *out_xi0,
                           struct EsTrajectory **out_trajectory);

// # Safety
// `trajectory` must be null or a handle from this library, not yet freed.
void es_trajectory_free(struct EsTrajectory *trajectory);

// Number of samples; 0 for a null handle.
//
// # Safety
// `trajectory` must be null or a live handle.
size_t es_trajectory_len(const struct EsTrajectory *trajectory);

// # Safety
// `trajectory` must be a live handle; `out_sample` writable.
enum EsStatus es_trajectory_sample(const struct EsTrajectory *trajectory,
                                   size_t index,
                                   struct EsSample *out_sample);

// Phase-locking, decay-rate and slope verdicts for a construction run.
//
// # Safety
// Both handles must be live; `out_report` writable.
enum EsStatus es_verify(const struct EsPotential *potential,
                        const struct EsTrajectory *trajectory,
                        struct EsVerification *out_report);

// Integrates the decaying solution backward from `x_max` and reports the
// boundary angle at 0. `construction` is the forward run of a dynamic plan
// (from [`es_construct`]) and must be null for frozen plans. Returns
// [`EsStatus::NotFound`] when the solution is not square integrable.
//
// # Safety
// `potential` must be a live handle, `construction` null or live,
// `out_detection` writable.
enum EsStatus es_detect_eigenvalue(const struct EsPotential *potential,
                                   const struct EsTrajectory *construction,
                                   double x_max,
                                   double tol,
                                   struct EsDetection *out_detection);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMBEDDED_SPECTRA_H */
