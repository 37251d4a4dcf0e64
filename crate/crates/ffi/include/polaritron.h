#ifndef POLARITRON_H
#define POLARITRON_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PolaritronStatus {
  POLARITRON_STATUS_OK = 0,
  POLARITRON_STATUS_NULL_POINTER = 1,
  POLARITRON_STATUS_INVALID_PARAMETER = 2,
  POLARITRON_STATUS_UNSTABLE = 3,
  POLARITRON_STATUS_SINGULAR = 4,
  POLARITRON_STATUS_GRID_TOO_NARROW = 5,
  POLARITRON_STATUS_INVALID_GRID = 6,
  POLARITRON_STATUS_BUFFER_TOO_SMALL = 7,
  POLARITRON_STATUS_NUMERICAL = 8,
  POLARITRON_STATUS_PANIC = 9,
} PolaritronStatus;

/**
 * Scalar fields of the parameter set.
 */
typedef enum PolaritronField {
  POLARITRON_FIELD_DELTA = 0,
  POLARITRON_FIELD_KAPPA = 1,
  POLARITRON_FIELD_OMEGA_X0 = 2,
  POLARITRON_FIELD_OMEGA_Y0 = 3,
  POLARITRON_FIELD_GAMMA_MX = 4,
  POLARITRON_FIELD_GAMMA_MY = 5,
  POLARITRON_FIELD_GX = 6,
  POLARITRON_FIELD_GY = 7,
  POLARITRON_FIELD_N_TH_X = 8,
  POLARITRON_FIELD_N_TH_Y = 9,
  POLARITRON_FIELD_GAMMA_NX = 10,
  POLARITRON_FIELD_GAMMA_NY = 11,
  POLARITRON_FIELD_ETA = 12,
  POLARITRON_FIELD_OMEGA_LO = 13,
} PolaritronField;

/**
 * Opaque parameter set.
 */
typedef struct PolaritronParams PolaritronParams;

/**
 * Opaque sampled spectrum.
 */
typedef struct PolaritronSpectrum PolaritronSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *polaritron_version(void);

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t polaritron_last_error(char *buf, size_t len);

/**
 * New parameter set holding the library defaults. Release with
 * `polaritron_params_free`.
 */
struct PolaritronParams *polaritron_params_new(void);

/**
 * # Safety
 * `p` must be null or a handle from `polaritron_params_new` not yet freed.
 */
void polaritron_params_free(struct PolaritronParams *p);

/**
 * Sets one field (a `PolaritronField` code). The whole set is validated;
 * an invalid value is rejected and the previous value kept.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum PolaritronStatus polaritron_params_set(struct PolaritronParams *p, int field, double value);

/**
 * Reads one field (a `PolaritronField` code).
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PolaritronStatus polaritron_params_get(const struct PolaritronParams *p,
                                            int field,
                                            double *out);

/**
 * Writes 1 to `out` when every drift eigenvalue has a positive real part.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PolaritronStatus polaritron_is_stable(const struct PolaritronParams *p, int *out);

/**
 * Eigenfrequencies, half-widths and photonic fractions of the three
 * conjugate pairs in ascending frequency. Each output holds 3 doubles; any
 * output may be null.
 *
 * # Safety
 * `p` must be a live handle; non-null outputs must hold 3 doubles.
 */
enum PolaritronStatus polaritron_eigenmodes(const struct PolaritronParams *p,
                                            double *frequencies,
                                            double *half_widths,
                                            double *photonic);

/**
 * Shot-noise-normalised heterodyne spectrum on `n` points from `start` to
 * `stop` (offset from the local oscillator). Release with
 * `polaritron_spectrum_free`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PolaritronStatus polaritron_heterodyne_spectrum(const struct PolaritronParams *p,
                                                     double start,
                                                     double stop,
                                                     size_t n,
                                                     struct PolaritronSpectrum **out);

/**
 * `S_bb` along the direction `theta` (rad from X towards Y).
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PolaritronStatus polaritron_mechanical_spectrum(const struct PolaritronParams *p,
                                                     double theta,
                                                     double start,
                                                     double stop,
                                                     size_t n,
                                                     struct PolaritronSpectrum **out);

/**
 * # Safety
 * `s` must be null or a live spectrum handle.
 */
void polaritron_spectrum_free(struct PolaritronSpectrum *s);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live spectrum handle.
 */
size_t polaritron_spectrum_len(const struct PolaritronSpectrum *s);

/**
 * Copies frequencies and values into caller buffers of `len` doubles;
 * either buffer may be null.
 *
 * # Safety
 * `s` must be a live handle; non-null buffers must hold `len` doubles.
 */
enum PolaritronStatus polaritron_spectrum_copy(const struct PolaritronSpectrum *s,
                                               double *frequencies,
                                               double *values,
                                               size_t len);

/**
 * Trapezoidal `∫ S dΩ/2π` over the spectrum grid.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum PolaritronStatus polaritron_spectrum_integral(const struct PolaritronSpectrum *s, double *out);

/**
 * Occupation along `theta`, integrated over `n` points from `start` to `stop`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PolaritronStatus polaritron_occupation(const struct PolaritronParams *p,
                                            double theta,
                                            double start,
                                            double stop,
                                            size_t n,
                                            double *out);

/**
 * Direction of least motion (rad) and its occupation.
 *
 * # Safety
 * `p` must be a live handle and both outputs writable.
 */
enum PolaritronStatus polaritron_coldest_angle(const struct PolaritronParams *p,
                                               double start,
                                               double stop,
                                               size_t n,
                                               double *theta,
                                               double *n_min);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLARITRON_H */
