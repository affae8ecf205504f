#ifndef TORUS_EIG_H
#define TORUS_EIG_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The nonzero values shared with the CLI have the same
 * meaning as its exit codes.
 */
typedef enum TorusEigStatus {
  TORUS_EIG_STATUS_OK = 0,
  TORUS_EIG_STATUS_INVALID_INPUT = 2,
  TORUS_EIG_STATUS_IO = 3,
  TORUS_EIG_STATUS_NUMERIC = 4,
  TORUS_EIG_STATUS_NULL_POINTER = 5,
  TORUS_EIG_STATUS_PANIC = 6,
} TorusEigStatus;

/**
 * Galerkin bound certificate for a conformal weight.
 */
typedef struct TorusEigCertificate TorusEigCertificate;

/**
 * Normalized flat spectrum `λ̄_0 = 0, λ̄_1, ...` of one torus.
 */
typedef struct TorusEigSpectrum TorusEigSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful one. Valid until the next call into this library.
 */
const char *torus_eig_last_error(void);

/**
 * `U(a, b)` for `(a, b)` in the fundamental region.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum TorusEigStatus torus_eig_upper_bound(double a, double b, double *out);

/**
 * Smallest `b` with `U(a, b) <= target`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum TorusEigStatus torus_eig_threshold(double a, double target, double *out);

/**
 * `8π²/√3 + 8π`.
 */
double torus_eig_conjectured_sup(void);

/**
 * `16π²/√3`.
 */
double torus_eig_uniform_bound(void);

/**
 * Normalized eigenvalues `λ̄_0..=λ̄_count` of the flat torus, with
 * multiplicity.
 *
 * # Safety
 * `out` must be null or point to writable memory for one pointer.
 */
enum TorusEigStatus torus_eig_spectrum_new(double a,
                                           double b,
                                           size_t count,
                                           struct TorusEigSpectrum **out);

/**
 * Number of stored eigenvalues, `count + 1`; zero for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle from `torus_eig_spectrum_new`.
 */
size_t torus_eig_spectrum_len(const struct TorusEigSpectrum *spectrum);

/**
 * `λ̄_k`.
 *
 * # Safety
 * `spectrum` must be null or a live handle; `out` must be null or
 * writable for one `double`.
 */
enum TorusEigStatus torus_eig_spectrum_get(const struct TorusEigSpectrum *spectrum,
                                           size_t k,
                                           double *out);

/**
 * # Safety
 * `spectrum` must be null or a live handle, not used afterwards.
 */
void torus_eig_spectrum_free(struct TorusEigSpectrum *spectrum);

/**
 * Ritz `λ̄₁`, `λ̄₂` for the metric `ω(u, v)·g_flat` with `ω` given as an
 * expression in `u`, `v`, against `U(a, b)`.
 *
 * # Safety
 * `weight` must be null or a NUL-terminated string; `out` must be null or
 * writable for one pointer.
 */
enum TorusEigStatus torus_eig_certificate_new(double a,
                                              double b,
                                              const char *weight,
                                              double cutoff,
                                              struct TorusEigCertificate **out);

/**
 * Normalized Ritz `λ̄₁`.
 *
 * # Safety
 * `cert` must be null or a live handle; `out` must be null or writable.
 */
enum TorusEigStatus torus_eig_certificate_lambda1(const struct TorusEigCertificate *cert,
                                                  double *out);

/**
 * Normalized Ritz `λ̄₂`.
 *
 * # Safety
 * `cert` must be null or a live handle; `out` must be null or writable.
 */
enum TorusEigStatus torus_eig_certificate_lambda2(const struct TorusEigCertificate *cert,
                                                  double *out);

/**
 * `U(a, b)`.
 *
 * # Safety
 * `cert` must be null or a live handle; `out` must be null or writable.
 */
enum TorusEigStatus torus_eig_certificate_bound(const struct TorusEigCertificate *cert,
                                                double *out);

/**
 * Galerkin basis size.
 *
 * # Safety
 * `cert` must be null or a live handle; `out` must be null or writable.
 */
enum TorusEigStatus torus_eig_certificate_basis_size(const struct TorusEigCertificate *cert,
                                                     size_t *out);

/**
 * Whether `λ̄₂ < U`.
 *
 * # Safety
 * `cert` must be null or a live handle; `out` must be null or writable.
 */
enum TorusEigStatus torus_eig_certificate_certified(const struct TorusEigCertificate *cert,
                                                    bool *out);

/**
 * # Safety
 * `cert` must be null or a live handle, not used afterwards.
 */
void torus_eig_certificate_free(struct TorusEigCertificate *cert);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORUS_EIG_H */
