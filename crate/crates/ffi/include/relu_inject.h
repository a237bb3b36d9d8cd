/* C interface to the injectivity-capacity library.
 *
 * Conventions:
 *   - Every entry point returns a relu_inject_status; RELU_INJECT_OK is 0.
 *   - Results and solver configurations are opaque handles created and
 *     destroyed through paired _new/_free calls. Freeing NULL is a no-op.
 *   - On failure, relu_inject_last_error_message() returns a human-readable
 *     message for the most recent error on the calling thread. The pointer
 *     stays valid until the next failing call on the same thread; never
 *     free it.
 *   - Internal panics are caught at the boundary and reported as
 *     RELU_INJECT_ERR_PANIC; they never unwind into the caller.
 */

#ifndef RELU_INJECT_H
#define RELU_INJECT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum relu_inject_status {
  RELU_INJECT_OK = 0,
  /* invalid argument values, dimensions, or enum discriminants */
  RELU_INJECT_ERR_INVALID_ARGUMENT = 1,
  /* variables outside the objective's domain (e.g. divergent lifted moment) */
  RELU_INJECT_ERR_DOMAIN = 2,
  /* capacity bracket found no sign change of the objective */
  RELU_INJECT_ERR_NO_SIGN_CHANGE = 3,
  /* the solver exhausted its budget before reaching tolerance */
  RELU_INJECT_ERR_NON_CONVERGENCE = 4,
  RELU_INJECT_ERR_NULL_POINTER = 5,
  RELU_INJECT_ERR_PANIC = 6
} relu_inject_status;

/* mode: 0 = weak injectivity, 1 = strong injectivity */
#define RELU_INJECT_MODE_WEAK 0
#define RELU_INJECT_MODE_STRONG 1

/* method: 0 = plain functional, 1 = partially lifted functional */
#define RELU_INJECT_METHOD_PLAIN 0
#define RELU_INJECT_METHOD_LIFTED 1

/* Opaque solver-configuration handle. */
typedef struct ReluInjectSolver ReluInjectSolver;
/* Opaque capacity-result handle. */
typedef struct ReluInjectResult ReluInjectResult;

/* Message of the most recent error on this thread (UTF-8, NUL-terminated). */
const char *relu_inject_last_error_message(void);

/* Creates a solver handle with default tolerances and budgets. */
ReluInjectSolver *relu_inject_solver_new(void);
void relu_inject_solver_free(ReluInjectSolver *solver);

/* objective_tol: residual tolerance on |phi0| at a capacity root.
 * var_tol: per-block stationarity / relative bracket-width tolerance. */
relu_inject_status relu_inject_solver_set_tolerances(ReluInjectSolver *solver,
                                                     double objective_tol,
                                                     double var_tol);

/* max_iters: objective-evaluation budget per outer optimizer run.
 * multistarts: independent jittered restarts for cold saddle solves.
 * rng_seed: seed driving the multistart jitter (results are deterministic
 * for a fixed seed). */
relu_inject_status relu_inject_solver_set_budget(ReluInjectSolver *solver,
                                                 size_t max_iters,
                                                 size_t multistarts,
                                                 uint64_t rng_seed);

/* Locates the capacity bound alpha_l: the zero crossing of the saddle value
 * in the last-layer expansion ratio, for the injectively admissible prefix
 * prefix[0..prefix_len]. Writes a result handle to *out on success; release
 * it with relu_inject_result_free. */
relu_inject_status relu_inject_capacity(const ReluInjectSolver *solver,
                                        const double *prefix,
                                        size_t prefix_len, int mode,
                                        int method, ReluInjectResult **out);

void relu_inject_result_free(ReluInjectResult *result);

/* Accessors. Scalar getters return NaN (or -1 / 0 for the integer ones) on a
 * NULL handle. */
double relu_inject_result_alpha_bound(const ReluInjectResult *result);
double relu_inject_result_relative_expansion(const ReluInjectResult *result);
double relu_inject_result_residual(const ReluInjectResult *result);
int relu_inject_result_converged(const ReluInjectResult *result);
size_t relu_inject_result_layers(const ReluInjectResult *result);

/* Copies the full expansion sequence alpha_1..alpha_l into out, which must
 * hold at least relu_inject_result_layers(result) doubles. */
relu_inject_status relu_inject_result_alphas(const ReluInjectResult *result,
                                             double *out, size_t out_len);

/* Evaluates the objective phi0 at user-supplied saddle variables.
 *
 * alphas has length `layers`; r and gamma have length layers - 1 (may be
 * NULL when layers == 1); gamma_bar has length `layers`. For the plain
 * method pass c3 = 0; for the lifted method c3 must be positive. Writes the
 * objective value to *out_total. */
relu_inject_status relu_inject_phi0(const double *alphas, size_t layers,
                                    int mode, int method, const double *r,
                                    const double *gamma_bar,
                                    const double *gamma, double nu, double c3,
                                    double *out_total);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RELU_INJECT_H */
