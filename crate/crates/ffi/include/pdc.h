#ifndef PDC_H
#define PDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PdcStatus {
  PDC_STATUS_OK = 0,
  PDC_STATUS_NULL_POINTER = 1,
  PDC_STATUS_INVALID_ARGUMENT = 2,
  PDC_STATUS_OUT_OF_RANGE = 3,
  PDC_STATUS_INVALID_MODEL = 4,
  PDC_STATUS_EVANESCENT = 5,
  PDC_STATUS_NO_SOLUTION = 6,
  PDC_STATUS_BUFFER_TOO_SMALL = 7,
  PDC_STATUS_PANIC = 8,
} PdcStatus;

typedef enum PdcDispersionKind {
  PDC_DISPERSION_KIND_CONSTANT = 0,
  PDC_DISPERSION_KIND_LINEAR = 1,
  PDC_DISPERSION_KIND_SELLMEIER = 2,
} PdcDispersionKind;

typedef enum PdcProcess {
  PDC_PROCESS_DOWN = 0,
  PDC_PROCESS_UP = 1,
} PdcProcess;

typedef enum PdcMethod {
  PDC_METHOD_EXACT = 0,
  PDC_METHOD_PERTURB2 = 1,
  PDC_METHOD_ODE = 2,
} PdcMethod;

/**
 * Opaque dispersion model.
 */
typedef struct PdcDispersion PdcDispersion;

/**
 * Opaque transfer matrix.
 */
typedef struct PdcTransfer PdcTransfer;

typedef struct PdcComplex {
  double re;
  double im;
} PdcComplex;

/**
 * Per-mode ensemble moments. `std_error` is NaN for analytic moments.
 */
typedef struct PdcModeMoments {
  double mean_intensity;
  double above_threshold;
  double count_rate;
  double std_error;
} PdcModeMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pdc_version(void);

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next call into the library from the same thread.
 */
const char *pdc_last_error_message(void);

/**
 * Builds a dispersion model. `params` holds `n_params` values: `mu0` for
 * constant, `mu0, alpha` for linear, `B1, C1, B2, C2, ...` for Sellmeier.
 *
 * # Safety
 * `params` must point to `n_params` doubles (or be null with `n_params == 0`)
 * and `out` must be writable.
 */
enum PdcStatus pdc_dispersion_new(enum PdcDispersionKind kind,
                                  const double *params,
                                  size_t n_params,
                                  double pump_index,
                                  double omega_lo,
                                  double omega_hi,
                                  struct PdcDispersion **out);

/**
 * # Safety
 * `d` must come from [`pdc_dispersion_new`] and not be freed twice.
 */
void pdc_dispersion_free(struct PdcDispersion *d);

/**
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum PdcStatus pdc_mu(const struct PdcDispersion *d, double omega, double *out);

/**
 * Smallest matching angle (internal, radians) for `process` at `omega`.
 *
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum PdcStatus pdc_solve_theta(const struct PdcDispersion *d,
                               double omega,
                               enum PdcProcess process,
                               double *out);

/**
 * Three-mode slab transfer for the triple matched for `process` at
 * `omega`. The matched angle is written to `theta_out` when non-null.
 * `ode_steps` is only read for [`PdcMethod::Ode`].
 *
 * # Safety
 * `d` must be a live handle, `out` writable, `theta_out` null or writable.
 */
enum PdcStatus pdc_transfer_build(const struct PdcDispersion *d,
                                  double omega,
                                  enum PdcProcess process,
                                  double length,
                                  double g,
                                  enum PdcMethod method,
                                  size_t ode_steps,
                                  double *theta_out,
                                  struct PdcTransfer **out);

/**
 * Three-mode slab transfer from explicit couplings and mismatches.
 *
 * # Safety
 * `out` must be writable.
 */
enum PdcStatus pdc_transfer_from_couplings(double kappa_d,
                                           double kappa_u,
                                           double delta_d,
                                           double delta_u,
                                           double length,
                                           enum PdcMethod method,
                                           size_t ode_steps,
                                           struct PdcTransfer **out);

/**
 * # Safety
 * `t` must come from a `pdc_transfer_*` constructor and not be freed twice.
 */
void pdc_transfer_free(struct PdcTransfer *t);

/**
 * Number of modes, 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t pdc_transfer_dim(const struct PdcTransfer *t);

/**
 * # Safety
 * `t` must be a live handle and `out` writable.
 */
enum PdcStatus pdc_transfer_get(const struct PdcTransfer *t,
                                size_t row,
                                size_t col,
                                struct PdcComplex *out);

/**
 * Largest entry of `|M^H eta M - eta|`.
 *
 * # Safety
 * `t` must be a live handle and `out` writable.
 */
enum PdcStatus pdc_transfer_metric_defect(const struct PdcTransfer *t, double *out);

/**
 * Analytic vacuum moments, one entry per mode in `(a, b*, c)` order.
 *
 * # Safety
 * `t` must be a live handle and `out` must hold `len` entries.
 */
enum PdcStatus pdc_analytic_moments(const struct PdcTransfer *t,
                                    struct PdcModeMoments *out,
                                    size_t len);

/**
 * Sampled vacuum moments; depends only on `(seed, shots, M)`.
 *
 * # Safety
 * `t` must be a live handle and `out` must hold `len` entries.
 */
enum PdcStatus pdc_monte_carlo_moments(const struct PdcTransfer *t,
                                       uint64_t seed,
                                       size_t shots,
                                       struct PdcModeMoments *out,
                                       size_t len);

/**
 * `(kappa_d L)^2 sinc^2(delta_d L / 2)`.
 */
double pdc_photon_pair_intensity(double kappa_d, double delta_d, double length);

/**
 * Two identical slabs of `(length, g)` on the pair matched at half the
 * pump frequency, idler transmission `t` between them with vacuum noise
 * filling the loss. Writes the signal fringe visibility.
 *
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum PdcStatus pdc_zwm_visibility(const struct PdcDispersion *d,
                                  double length,
                                  double g,
                                  double t,
                                  enum PdcMethod method,
                                  size_t ode_steps,
                                  size_t n_phi,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDC_H */
