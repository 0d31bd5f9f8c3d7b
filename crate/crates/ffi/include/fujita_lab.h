#ifndef FUJITA_LAB_H
#define FUJITA_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  FL_MASS_SIGN_POSITIVE = 0,
  FL_MASS_SIGN_ZERO = 1,
  FL_MASS_SIGN_NEGATIVE = 2,
} FlMassSign;

typedef enum {
  FL_OUTCOME_KIND_BLOWN_UP = 0,
  FL_OUTCOME_KIND_GLOBAL = 1,
  FL_OUTCOME_KIND_INCONCLUSIVE = 2,
} FlOutcomeKind;

typedef enum {
  FL_REGIME_NO_GLOBAL_RHO_POSITIVE = 0,
  FL_REGIME_NO_GLOBAL_SUBCRITICAL = 1,
  FL_REGIME_NO_GLOBAL_CRITICAL_RHO_ZERO = 2,
  FL_REGIME_GLOBAL_CANDIDATE_SUPERCRITICAL = 3,
  FL_REGIME_UNCLASSIFIED = 4,
} FlRegime;

typedef enum {
  FL_SCHEME_IMPLICIT_EULER = 0,
  FL_SCHEME_CRANK_NICOLSON = 1,
} FlScheme;

typedef enum {
  FL_STATUS_OK = 0,
  /**
   * Null pointer, length mismatch or malformed string.
   */
  FL_STATUS_INVALID_ARGUMENT = 1,
  FL_STATUS_CONFIG = 2,
  /**
   * The parameters violate a hypothesis of the requested computation.
   */
  FL_STATUS_HYPOTHESIS = 3,
  FL_STATUS_NUMERICAL = 4,
  FL_STATUS_PANIC = 5,
} FlStatus;

/**
 * Opaque radial field living on a semigroup's grid.
 */
typedef struct FlField FlField;

/**
 * Opaque semigroup operator on a radial grid.
 */
typedef struct FlSemigroup FlSemigroup;

typedef struct {
  uint32_t dim;
  double sigma1;
  double sigma2;
  double rho;
  double p;
} FlProblemParams;

/**
 * Missing values (empty window, no weights) are NaN; an infinite `p_star` is `+INFINITY`.
 */
typedef struct {
  double p_fujita;
  double mu_star;
  double p_c;
  double p_star;
  double r_c;
  double r_lo;
  double r_hi;
  double mu;
  double beta;
  double delta;
  FlRegime regime;
} FlExponentReport;

typedef struct {
  double dt_init;
  double dt_min;
  double dt_max;
  double dt_rel;
  double max_rel_change;
  double blowup_norm_cap;
  double t_max;
  uint64_t max_steps;
} FlBlowupConfig;

/**
 * For `INCONCLUSIVE`, `fl_last_error_message` holds the reason.
 */
typedef struct {
  FlOutcomeKind kind;
  /**
   * Blow-up time, or the time integration stopped.
   */
  double t_end;
  double final_norm;
  double peak_norm;
  uint64_t accepted_steps;
} FlOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fl_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fl_last_error_message(char *buf, size_t len);

/**
 * Closed-form exponents for `params`.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
FlStatus fl_exponent_report(const FlProblemParams *params, FlMassSign mass, FlExponentReport *out);

/**
 * Creates the semigroup for `|x|^σ1 u_t = Δu` in dimension `dim` on a
 * log-uniform grid of `nodes` points on `[1e-4·r_max, r_max]`.
 *
 * # Safety
 * `out` must be a valid pointer. The handle must be released with `fl_semigroup_free`.
 */
FlStatus fl_semigroup_new(uint32_t dim,
                          double sigma1,
                          double r_max,
                          size_t nodes,
                          FlScheme scheme,
                          double max_dt,
                          FlSemigroup **out);

/**
 * # Safety
 * `sg` must be null or a handle from `fl_semigroup_new` not yet freed.
 */
void fl_semigroup_free(FlSemigroup *sg);

/**
 * Number of grid nodes, 0 for a null handle.
 *
 * # Safety
 * `sg` must be null or a live handle.
 */
size_t fl_semigroup_len(const FlSemigroup *sg);

/**
 * Copies the grid nodes into `out`, which must hold exactly `fl_semigroup_len` values.
 *
 * # Safety
 * `sg` must be a live handle and `out` must point to `len` writable doubles.
 */
FlStatus fl_semigroup_nodes(const FlSemigroup *sg, double *out, size_t len);

/**
 * A field with the given nodal values on `sg`'s grid.
 *
 * # Safety
 * `sg` must be a live handle, `values` must point to `len` doubles and `out`
 * must be valid. Release the field with `fl_field_free`.
 */
FlStatus fl_field_from_values(const FlSemigroup *sg,
                              const double *values,
                              size_t len,
                              FlField **out);

/**
 * A field sampled from a named profile: `zero`, `gaussian(c, w, a)`,
 * `bump(support, a)` or `power(k, a)`.
 *
 * # Safety
 * `sg` must be a live handle, `text` a NUL-terminated string and `out` valid.
 */
FlStatus fl_field_from_profile(const FlSemigroup *sg, const char *text, FlField **out);

/**
 * # Safety
 * `f` must be null or a live field handle.
 */
void fl_field_free(FlField *f);

/**
 * # Safety
 * `f` must be a live handle and `out` must point to `len` writable doubles.
 */
FlStatus fl_field_values(const FlField *f, double *out, size_t len);

/**
 * `(ω_N ∫ |u|^q r^{N-1} dr)^{1/q}`; `q = INFINITY` gives the maximum norm.
 *
 * # Safety
 * `f` must be a live handle and `out` valid.
 */
FlStatus fl_field_lq_norm(const FlField *f, double q, double *out);

/**
 * `S(t) u` as a new field.
 *
 * # Safety
 * `sg` and `u` must be live handles, `u` created on `sg`'s grid, and `out` valid.
 */
FlStatus fl_semigroup_apply(const FlSemigroup *sg, const FlField *u, double t, FlField **out);

/**
 * Defaults used by `fl_integrate_nonlinear` when `cfg` is null.
 */
FlBlowupConfig fl_blowup_config_default(void);

/**
 * Integrates the full nonlinear problem from `u0` with forcing `w`.
 *
 * # Safety
 * `sg`, `u0`, `w` must be live handles on the same grid; `params` and `out`
 * valid; `cfg` null or valid.
 */
FlStatus fl_integrate_nonlinear(const FlSemigroup *sg,
                                const FlField *u0,
                                const FlField *w,
                                const FlProblemParams *params,
                                const FlBlowupConfig *cfg,
                                FlOutcome *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUJITA_LAB_H */
