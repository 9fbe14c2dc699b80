/* C ABI for the lattice laboratory.
 *
 * Lattices travel as opaque handles; every function returns a status code
 * (LATLAB_OK = 0, negative on error) and writes results through out
 * pointers. latlab_last_error_message() describes the most recent failure
 * on the calling thread.
 *
 * Kept in sync with the Rust crate; regenerate with:
 *   cbindgen --config cbindgen.toml --crate latlab-ffi --output include/latlab.h
 */

#ifndef LATLAB_H
#define LATLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define LATLAB_OK 0
#define LATLAB_ERR_NULL_ARGUMENT (-1)
#define LATLAB_ERR_INVALID_ARGUMENT (-2)
#define LATLAB_ERR_BUDGET_EXCEEDED (-3)
#define LATLAB_ERR_NUMERIC (-4)
#define LATLAB_ERR_INSUFFICIENT_DATA (-5)
#define LATLAB_ERR_PANIC (-9)

/* Opaque lattice handle. */
typedef struct LatlabLattice LatlabLattice;

/* Version string; static storage, do not free. */
const char *latlab_version(void);

/* Message for the most recent failure on this thread, or NULL. Valid until
 * the next failing call on the same thread; do not free. */
const char *latlab_last_error_message(void);

/* Create a lattice from a row-major k x k basis whose columns generate; the
 * determinant must be 1 within 1e-9. On success writes a handle that must be
 * released with latlab_lattice_free. */
int32_t latlab_lattice_create(size_t k,
                              const double *basis_row_major,
                              LatlabLattice **out);

/* Release a handle; NULL is a no-op. */
void latlab_lattice_free(LatlabLattice *handle);

/* Length of a shortest nonzero vector. */
int32_t latlab_lattice_lambda1(const LatlabLattice *handle, double *out);

/* Shortest vector (k doubles), its integer coordinates in the creation
 * basis (k int64) and its length. */
int32_t latlab_lattice_shortest_vector(const LatlabLattice *handle,
                                       double *out_vector,
                                       int64_t *out_coeffs,
                                       double *out_lambda1);

/* Writes 1 when no nonzero vector is shorter than eps, else 0. */
int32_t latlab_lattice_in_k_eps(const LatlabLattice *handle,
                                double eps,
                                int32_t *out);

/* Haar mean of the primitive-vector sum of the closed-ball indicator:
 * vol_k(radius) / zeta(k). */
int32_t latlab_siegel_mean_ball(size_t k, double radius, double *out);

/* Effective decay exponent gamma / (1 + m n k (k-1) (2 ell + N/2)) with
 * N = m^2 + mn + n^2 - 1 and k = m + n. */
int32_t latlab_gamma_tilde(double gamma,
                           uint32_t ell,
                           size_t m,
                           size_t n,
                           double *out);

/* Mixing-side error bound
 * E (r f_l1 + r^-(2 ell + big_n / 2) f_sobolev e^{-gamma t}). */
int32_t latlab_rhs_mixing_bound(double e,
                                double r,
                                double f_l1,
                                double f_sobolev,
                                uint32_t ell,
                                uint32_t big_n,
                                double gamma,
                                double t,
                                double *out);

/* The balancing scale ((2/c) e^{-beta t})^(1/k). */
int32_t latlab_eps_of_balancing(double c,
                                double beta,
                                double t,
                                size_t k,
                                double *out);

/* Log-linear decay fit on (floor_t, err) pairs; drops nonpositive errors
 * and needs at least three remaining points. */
int32_t latlab_decay_fit(const double *floor_t,
                         const double *err,
                         size_t len,
                         double *out_gamma_hat,
                         double *out_log_c_hat,
                         double *out_residual);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LATLAB_H */
