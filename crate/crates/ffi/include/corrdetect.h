#ifndef CORRDETECT_H
#define CORRDETECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_INVALID_PARAMETER = 1,
  CD_STATUS_INVALID_SET = 2,
  CD_STATUS_DIMENSION_MISMATCH = 3,
  CD_STATUS_NOT_POSITIVE_DEFINITE = 4,
  CD_STATUS_ENUMERATION_CAP = 5,
  CD_STATUS_EXACT_UNAVAILABLE = 6,
  CD_STATUS_UNSUPPORTED = 7,
  CD_STATUS_PRECONDITION = 8,
  CD_STATUS_PARSE = 9,
  CD_STATUS_IO = 10,
  CD_STATUS_NULL_POINTER = 11,
  CD_STATUS_PANIC = 12,
} CdStatus;

// Overlap-MGF evaluation mode for [`cd_bayes_lower_bound`].
typedef enum CdMgfMode {
  CD_MGF_MODE_EXACT = 0,
  CD_MGF_MODE_COROLLARY_BOUND = 1,
  CD_MGF_MODE_MONTE_CARLO = 2,
} CdMgfMode;

// Opaque candidate-set family.
typedef struct CdFamily CdFamily;

// Opaque random stream.
typedef struct CdRng CdRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. Valid until the next
// failing call on the same thread; never NULL.
const char *cd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cd_version(void);

// Circular intervals `{i, ..., i+k-1} mod n`.
enum CdStatus cd_family_intervals(size_t n, size_t k, struct CdFamily **out_family);

// All `k`-subsets of `n` coordinates.
enum CdStatus cd_family_ksets(size_t n, size_t k, struct CdFamily **out_family);

// Products of circular intervals on the torus `Z_m^d`.
//
// # Safety
// `sides` must point to `d` readable values.
enum CdStatus cd_family_hypercubes(size_t m,
                                   const size_t *sides,
                                   size_t d,
                                   struct CdFamily **out_family);

// Perfect matchings of `K_{k,k}`, `n = k^2`.
enum CdStatus cd_family_matchings(size_t k, struct CdFamily **out_family);

// Spanning trees of `K_{k+1}`, `n = k(k+1)/2`.
enum CdStatus cd_family_trees(size_t k, struct CdFamily **out_family);

// Explicit family from the text format (1-based indices, one member per
// line). `n = 0` infers the dimension from the largest index.
//
// # Safety
// `text` must be a NUL-terminated string.
enum CdStatus cd_family_parse_explicit(const char *text, size_t n, struct CdFamily **out_family);

// Releases a family.
//
// # Safety
// `family` must come from a `cd_family_*` constructor and not be used afterwards.
void cd_family_free(struct CdFamily *family);

// Ambient dimension `n`, or 0 for NULL.
//
// # Safety
// `family` must be NULL or a live handle.
size_t cd_family_n(const struct CdFamily *family);

// Member size `k`, or 0 for NULL.
//
// # Safety
// `family` must be NULL or a live handle.
size_t cd_family_k(const struct CdFamily *family);

// `ln N`, or NaN for NULL.
//
// # Safety
// `family` must be NULL or a live handle.
double cd_family_log_size(const struct CdFamily *family);

// Draws a uniform member into `out_set` (`k` entries, sorted, 0-based).
//
// # Safety
// Handles must be live; `out_set` must have room for `k` values.
enum CdStatus cd_family_sample_member(const struct CdFamily *family,
                                      struct CdRng *rng,
                                      size_t *out_set);

// Stream for trial `trial` of experiment `experiment` under `master_seed`.
struct CdRng *cd_rng_new(uint64_t master_seed, uint64_t experiment, uint64_t trial);

// Releases a stream.
//
// # Safety
// `rng` must come from [`cd_rng_new`] and not be used afterwards.
void cd_rng_free(struct CdRng *rng);

// `n` i.i.d. standard normals into `out_x`.
//
// # Safety
// `rng` must be live; `out_x` must have room for `n` values.
enum CdStatus cd_sample_null(struct CdRng *rng, size_t n, double *out_x);

// One draw from `N(0, A_S)` with equicorrelation `rho` on `set`.
//
// # Safety
// `set` has `k` entries; `out_x` has room for `n` values.
enum CdStatus cd_sample_alternative(struct CdRng *rng,
                                    size_t n,
                                    double rho,
                                    const size_t *set,
                                    size_t k,
                                    double *out_x);

// `x^T (I - A_S^{-1}) x`.
//
// # Safety
// `x` has `n` entries, `set` has `k` entries.
enum CdStatus cd_quad_form(const double *x,
                           size_t n,
                           const size_t *set,
                           size_t k,
                           double rho,
                           double *out_value);

// `ln det A_S = (k-1) ln(1-ρ) + ln(1 + ρ(k-1))`.
double cd_log_det_as(size_t k, double rho);

// `(Σ x_i)^2`.
//
// # Safety
// `x` has `n` entries.
enum CdStatus cd_squared_sum_stat(const double *x, size_t n, double *out_value);

// GLRT scan `max_S x^T (I - A_S^{-1}) x` over the family.
//
// # Safety
// `x` has `n` entries, `family` is live.
enum CdStatus cd_glrt_stat(const double *x,
                           size_t n,
                           const struct CdFamily *family,
                           double rho,
                           double *out_value);

// `max_S (Σ_{i in S} x_i)^2` over the family.
//
// # Safety
// `x` has `n` entries, `family` is live.
enum CdStatus cd_local_sq_stat(const double *x,
                               size_t n,
                               const struct CdFamily *family,
                               double *out_value);

// Dyadic multiscale scan; `out_start`/`out_len` (0-based) may be NULL.
//
// # Safety
// `x` has `n` entries.
enum CdStatus cd_dyadic_scan_stat(const double *x,
                                  size_t n,
                                  double *out_value,
                                  size_t *out_start,
                                  size_t *out_len);

// Largest of `m` histogram bins of `Φ(x_i)`.
//
// # Safety
// `x` has `n` entries.
enum CdStatus cd_gof_stat(const double *x, size_t n, size_t m, double *out_value);

// `n/m + sqrt(3 n ln(m) / m)`.
double cd_gof_threshold(size_t n, size_t m);

// `ln L(x)` for the uniform prior on an enumerable family.
//
// # Safety
// `x` has `n` entries, `family` is live.
enum CdStatus cd_log_bayes_lr(const double *x,
                              size_t n,
                              const struct CdFamily *family,
                              double rho,
                              double *out_value);

// `ρ a^2 / (1+ρ) - ½ ln(1 - ρ^2)`.
double cd_nu(double rho, double a);

// Clipped Bayes-risk lower bound. `pairs` and `seed` are used only in
// Monte Carlo mode. `out_mgf` may be NULL.
//
// # Safety
// `family` is live.
enum CdStatus cd_bayes_lower_bound(const struct CdFamily *family,
                                   double rho,
                                   double a,
                                   enum CdMgfMode mode,
                                   uint64_t pairs,
                                   uint64_t seed,
                                   double *out_bound,
                                   double *out_mgf);

// Printed sufficient condition of the family's corollary.
//
// # Safety
// `family` is live.
enum CdStatus cd_corollary_condition(const struct CdFamily *family,
                                     double rho,
                                     bool *out_holds,
                                     double *out_guaranteed_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRDETECT_H */
