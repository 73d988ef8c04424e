#ifndef DEGENLAB_H
#define DEGENLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DL_OK 0

#define DL_ERR_NULL 1

#define DL_ERR_INVALID 2

#define DL_ERR_DIMENSION 3

/**
 * Non-convergence, censoring overflow or quadrature failure.
 */
#define DL_ERR_NUMERICAL 4

#define DL_ERR_PANIC 5

/**
 * Opaque parameter set.
 */
typedef struct DlParams DlParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dl_version(void);

/**
 * Message of the last failed call on this thread. Valid until the next failing call.
 */
const char *dl_last_error(void);

/**
 * Creates a parameter set; free it with `dl_params_free`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle pointer.
 */
int dl_params_new(size_t n,
                  size_t m,
                  double d1,
                  double d1p,
                  double d2,
                  double d2p,
                  struct DlParams **out);

/**
 * # Safety
 * `p` must come from `dl_params_new` and not be freed twice. Null is ignored.
 */
void dl_params_free(struct DlParams *p);

/**
 * Quasi-distance between two points of `n + m` coordinates each.
 *
 * # Safety
 * `x` and `y` must point to `len` readable doubles; `out` must be writable.
 */
int dl_distance(const struct DlParams *p,
                const double *x,
                const double *y,
                size_t len,
                double *out);

/**
 * Spectral gap of the Neumann form on the interval `(a, b)` with `cells` (odd) cells.
 *
 * # Safety
 * `out` must be writable.
 */
int dl_interval_gap(const struct DlParams *p, double a, double b, size_t cells, double *out);

/**
 * Heat kernel `K_t(x0; x0)` on the default truncation cube (`n = 1`, `m <= 1`).
 *
 * # Safety
 * `x0` must point to `len` readable doubles; `out` must be writable.
 */
int dl_heat_diagonal(const struct DlParams *p,
                     const double *x0,
                     size_t len,
                     double t,
                     double dt,
                     size_t cells,
                     double *out);

/**
 * Heat mass on `x1 < 0` at time `t` from `x0 > 0` (`n = 1`, `m = 0`).
 *
 * # Safety
 * `out` must be writable.
 */
int dl_crossing_mass(const struct DlParams *p,
                     double x0,
                     double t,
                     double dt,
                     size_t cells,
                     double *out);

/**
 * Probability of reaching `a` before `b` from `x0` for the coefficient `(1 v |x|)^(2 deltap)`.
 *
 * # Safety
 * `out` must be writable.
 */
int dl_hitting_oracle(double deltap, double a, double x0, double b, double *out);

/**
 * Euler-Maruyama estimate of the same probability with its standard error.
 *
 * # Safety
 * `estimate` and `stderr` must be writable.
 */
int dl_simulate_hitting(double deltap,
                        double a,
                        double x0,
                        double b,
                        double dt,
                        uint64_t paths,
                        uint64_t seed,
                        double *estimate,
                        double *stderr);

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to `len`).
 * Returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null with `len == 0`.
 */
size_t dl_copy_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEGENLAB_H */
