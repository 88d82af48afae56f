#ifndef SPHFIT_H
#define SPHFIT_H

/* C interface to the spherical-fitting library: scattered-data smoothing on
 * the unit sphere by weighted spectral filters, with quadrature-weight
 * construction, adaptive parameter selection, and distributed fitting
 * behind a JSON batch runner.
 *
 * Every function returns a status code; on failure the thread-local message
 * from sphfit_last_error() describes what went wrong.  Handles are created
 * by the library and released with the matching _free function (safe on
 * NULL).
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sphfit_status {
  SPHFIT_OK = 0,
  SPHFIT_EINTERNAL = 1, /* unexpected failure */
  SPHFIT_EINVAL = 2,    /* invalid argument or configuration */
  SPHFIT_ENUMERIC = 3,  /* numerical infeasibility (weights, conditioning) */
  SPHFIT_EIO = 4        /* file system failure */
} sphfit_status;

const char* sphfit_version(void);

/* Message describing this thread's most recent failure ("" if none). */
const char* sphfit_last_error(void);

typedef struct sphfit_points sphfit_points;
typedef struct sphfit_rule sphfit_rule;
typedef struct sphfit_fitted sphfit_fitted;

/* Truncated zonal kernel: degree-k coefficient (1 + k)^(-2 gamma) for
 * k = 0..k_max on S^d.  gamma must exceed d / 2. */
typedef struct sphfit_kernel {
  int d;
  double gamma;
  int k_max;
} sphfit_kernel;

/* ---- geometry ---- */

/* Deterministic spherical Fibonacci lattice. */
sphfit_status sphfit_points_fibonacci(int n, sphfit_points** out);

/* Independent uniform points; identical seeds give identical points. */
sphfit_status sphfit_points_random(int n, uint64_t seed, sphfit_points** out);

/* Copies a row-major n x 3 array of unit vectors (1e-6 normalization slack). */
sphfit_status sphfit_points_create(const double* xyz, int n, sphfit_points** out);

sphfit_status sphfit_points_count(const sphfit_points* pts, int* n);

/* Copies the coordinates into a caller buffer of 3 n doubles. */
sphfit_status sphfit_points_get(const sphfit_points* pts, double* xyz);

void sphfit_points_free(sphfit_points* pts);

/* ---- quadrature ---- */

/* Solves for nonnegative weights that integrate all spherical polynomials of
 * degree <= `degree` exactly (discrepancy <= tol; pass tol <= 0 for the
 * default 1e-20).  Fails with SPHFIT_ENUMERIC when the geometry cannot
 * support the degree. */
sphfit_status sphfit_rule_compute(const sphfit_points* pts, int degree, double tol,
                                  sphfit_rule** out);

/* Equal weights 1/n without solving (degree recorded as given). */
sphfit_status sphfit_rule_equal_weights(const sphfit_points* pts, int degree,
                                        sphfit_rule** out);

sphfit_status sphfit_rule_count(const sphfit_rule* rule, int* n);

/* Copies the weights into a caller buffer of n doubles. */
sphfit_status sphfit_rule_weights(const sphfit_rule* rule, double* w);

sphfit_status sphfit_rule_info(const sphfit_rule* rule, int* degree, double* residual);

/* Largest degree the rule integrates exactly within tol (tol <= 0 for the
 * default 1e-12). */
sphfit_status sphfit_rule_max_exact_degree(const sphfit_rule* rule, double tol, int* out);

void sphfit_rule_free(sphfit_rule* rule);

/* ---- fitting ---- */

/* Weighted spectral-filter fit of the samples y (one per rule node).
 * `filter` is one of "tikhonov", "itik:<v>", "cutoff", "landweber:<tau>:<t>".
 * lambda must be positive, except that landweber with t > 0 may pass
 * lambda <= 0 to use its iteration-count-implied level 1 / (tau t). */
sphfit_status sphfit_fit(const sphfit_rule* rule, const sphfit_kernel* kernel,
                         const double* y, const char* filter, double lambda,
                         sphfit_fitted** out);

sphfit_status sphfit_fitted_count(const sphfit_fitted* f, int* n);

/* Copies the expansion coefficients into a caller buffer of n doubles. */
sphfit_status sphfit_fitted_coeffs(const sphfit_fitted* f, double* a);

/* Evaluates the fitted expansion at query points (one double per query). */
sphfit_status sphfit_fitted_evaluate(const sphfit_fitted* f, const sphfit_points* queries,
                                     double* values);

void sphfit_fitted_free(sphfit_fitted* f);

/* ---- batch runner ---- */

/* Executes one JSON-configured command (gen-points, quadrature, fit,
 * lepskii, dcfit, study, diagnostics, calibrate), writing its output files
 * and a manifest under out_dir.  Outputs are a pure function of the config,
 * so reruns are byte-identical.  When message is non-NULL the one-line run
 * summary is copied into it (truncated to message_cap - 1 characters). */
sphfit_status sphfit_run_json(const char* config_json, const char* out_dir, char* message,
                              size_t message_cap);

/* Re-executes the config embedded in a manifest written by sphfit_run_json. */
sphfit_status sphfit_run_manifest(const char* manifest_path, const char* out_dir, char* message,
                                  size_t message_cap);

#ifdef __cplusplus
}
#endif

#endif /* SPHFIT_H */
