#ifndef QTRACE_H
#define QTRACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QtStatus {
  QT_STATUS_OK = 0,
  QT_STATUS_NULL_POINTER = 1,
  // Out-of-range order, dimension or parameter.
  QT_STATUS_INVALID_ARGUMENT = 2,
  // Matrix not Hermitian, not finite, or not (strictly) positive as required.
  QT_STATUS_INVALID_MATRIX = 3,
  // Eigensolver or quadrature failure.
  QT_STATUS_NUMERICAL = 4,
  QT_STATUS_PANIC = 5,
} QtStatus;

// Opaque pair `(rho, sigma)` with `sigma` strictly positive and `rho` positive semidefinite.
typedef struct QtPair QtPair;

// Constants attached to an order `s`; see `qt_g_constant`.
typedef struct QtConstants {
  double s;
  double g_s;
  double c_s;
  double c_s_over_s;
  // `+inf` when `r*` overflows (s below about 1.4e-3).
  double r_star;
  double log1p_r_star;
  double ratio;
  double residual;
} QtConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
// The pointer stays valid until the next `qt_*` call on the same thread.
const char *qt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qt_version(void);

// # Safety
// `out` must be NULL or point to writable memory for one `QtConstants`.
enum QtStatus qt_g_constant(double s, struct QtConstants *out);

// `c_s = s^s (1-s)^{1-s}` for `s` in `[0, 1]`.
//
// # Safety
// `out` must be NULL or point to a writable `double`.
enum QtStatus qt_c_constant(double s, double *out);

// # Safety
// `out` must be NULL or point to a writable `double`.
enum QtStatus qt_lambert_w_minus1(double x, double *out);

// Maximizer `r*` of `ln(1+r)/r^s`.
//
// # Safety
// `out` must be NULL or point to a writable `double`.
enum QtStatus qt_critical_r(double s, double *out);

// Builds a pair from row-major `dim x dim` matrices. Imaginary parts may be NULL.
//
// # Safety
// Non-NULL matrix pointers must reference `dim * dim` readable doubles, and
// `out` must be NULL or point to a writable `QtPair *`.
enum QtStatus qt_pair_new(size_t dim,
                          const double *rho_re,
                          const double *rho_im,
                          const double *sigma_re,
                          const double *sigma_im,
                          struct QtPair **out);

// The witness pair `(Π_k/k, (λ/d) I_d)`.
//
// # Safety
// `out` must be NULL or point to a writable `QtPair *`.
enum QtStatus qt_witness_new(size_t d, size_t k, double lambda, struct QtPair **out);

// Releases a pair. NULL is ignored.
//
// # Safety
// `pair` must be NULL or a handle from `qt_pair_new`/`qt_witness_new` not yet freed.
void qt_pair_free(struct QtPair *pair);

// Dimension of the pair, or 0 for NULL.
//
// # Safety
// `pair` must be NULL or a live handle.
size_t qt_pair_dim(const struct QtPair *pair);

// `Q = Tr rho (log(rho + sigma) - log sigma)` by spectral calculus.
//
// # Safety
// `pair` must be NULL or a live handle; `out` NULL or a writable `double`.
enum QtStatus qt_q_direct(const struct QtPair *pair, double *out);

// `Q` from the layer-cake integral of the tail function.
//
// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_q_layercake(const struct QtPair *pair, double *out);

// `Q` by integrating the BKM quadratic form along `sigma + t rho`.
//
// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_q_bkm_route(const struct QtPair *pair, double *out);

// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_q2_bkm(const struct QtPair *pair, double *out);

// `Q_2(rho || rho + sigma)` via the layer-cake route.
//
// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_q2_collision(const struct QtPair *pair, double *out);

// Layer-cake `Q_{1+s}`.
//
// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_q_alpha_layercake(const struct QtPair *pair, double s, double *out);

// Sandwiched `Q̃_{1+s}`.
//
// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_q_alpha_sandwiched(const struct QtPair *pair, double s, double *out);

// `R = ||sigma^{-1/2} rho sigma^{-1/2}||`.
//
// # Safety
// As for `qt_q_direct`.
enum QtStatus qt_relative_sup(const struct QtPair *pair, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTRACE_H */
