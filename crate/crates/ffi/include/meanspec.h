#ifndef MEANSPEC_H
#define MEANSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; positive values match the command-line exit codes.
 */
typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_INVALID_INPUT = 2,
  MS_STATUS_CONVERGENCE = 3,
  MS_STATUS_RESOLUTION = 4,
  MS_STATUS_INSUFFICIENT = 5,
  MS_STATUS_SAMPLING = 6,
  MS_STATUS_IO = 7,
  MS_STATUS_NULL_POINTER = -1,
  MS_STATUS_PANIC = -2,
} MsStatus;

/**
 * A domain description.
 */
typedef struct MsDomain MsDomain;

/**
 * A computed spectrum with mean values.
 */
typedef struct MsSpectrum MsSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library.
 */
const char *ms_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ms_version(void);

/**
 * Parses a descriptor such as `"disk:1"` or `"box:1x2"`.
 */
enum MsStatus ms_domain_parse(const char *desc, struct MsDomain **out);

void ms_domain_free(struct MsDomain *domain);

/**
 * Volume `|Ω|` of the domain.
 */
enum MsStatus ms_domain_volume(const struct MsDomain *domain, double *out);

/**
 * First `n` modes of a box, disk or ball from closed forms.
 */
enum MsStatus ms_spectrum_exact(const struct MsDomain *domain,
                                uintptr_t n,
                                struct MsSpectrum **out);

/**
 * First `n` modes of the finite-difference operator at spacing `h`.
 */
enum MsStatus ms_spectrum_grid(const struct MsDomain *domain,
                               double h,
                               uintptr_t n,
                               uint64_t seed,
                               struct MsSpectrum **out);

void ms_spectrum_free(struct MsSpectrum *spectrum);

/**
 * Number of modes; zero for a null handle.
 */
uintptr_t ms_spectrum_len(const struct MsSpectrum *spectrum);

/**
 * Eigenvalue and mean of mode `index` (0-based).
 */
enum MsStatus ms_spectrum_mode(const struct MsSpectrum *spectrum,
                               uintptr_t index,
                               double *lambda,
                               double *mean);

/**
 * Number of nonzero-mean modes among all modes of the spectrum.
 * `convention`: 0 canonical, 1 cluster.
 */
enum MsStatus ms_census_count(const struct MsSpectrum *spectrum, int convention, uintptr_t *out);

/**
 * Spectral heat mass of the width-`eps` boundary strip at time `t`, for an
 * exact spectrum.
 */
enum MsStatus ms_heat_mass(const struct MsSpectrum *spectrum,
                           double eps,
                           double t,
                           double *value,
                           double *bound);

/**
 * Survival probability of Brownian motion started at distance `eps` from a
 * half-space boundary, after time `t`.
 */
enum MsStatus ms_halfspace_survival(double eps,
                                    double t,
                                    uintptr_t n_paths,
                                    uint64_t seed,
                                    double *value,
                                    double *stderr);

/**
 * Tail sum `Σ e^{−c k^{2/d} eps²} / √(c k^{2/d})` over `c k^{2/d} >= B`.
 */
enum MsStatus ms_gamma_tail(double c_weyl,
                            uintptr_t d,
                            double eps,
                            double c_cutoff,
                            double *sum,
                            double *ratio);

/**
 * `k`-th positive zero of `J_order`.
 */
enum MsStatus ms_bessel_zero(uint32_t order, uint32_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEANSPEC_H */
