#ifndef POLYSTAB_H
#define POLYSTAB_H

#include <stddef.h>
#include <stdint.h>

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_CONFIG = 2,
  PS_STATUS_DIMENSION = 3,
  PS_STATUS_PARITY = 4,
  PS_STATUS_CLASSIFICATION = 5,
  PS_STATUS_NUMERICAL = 6,
  PS_STATUS_ADMISSIBILITY = 7,
  PS_STATUS_MONOTONICITY = 8,
  PS_STATUS_INCONCLUSIVE = 9,
  PS_STATUS_SEARCH = 10,
  PS_STATUS_RANGE = 11,
  PS_STATUS_IO = 12,
  PS_STATUS_UNSUPPORTED = 13,
  PS_STATUS_BUFFER_TOO_SMALL = 14,
  PS_STATUS_PANIC = 99,
} PsStatus;

// Opaque converged monotone iterate.
typedef struct PsIterate PsIterate;

// Opaque integrated profile.
typedef struct PsProfile PsProfile;

typedef struct PsCertificate {
  double gamma;
  double sup_value;
  double sup_radius;
  double margin;
  // 0 pass, 1 fail, 2 inconclusive (sup in the tail band).
  int32_t verdict;
} PsCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static, NUL-terminated version string.
const char *ps_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 when there is none.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
size_t ps_last_error(char *buf, size_t len);

// `γ_{N,m}` as a float.
//
// # Safety
// `out` must be a valid pointer.
enum PsStatus ps_gamma(uint32_t m, uint32_t n, double *out);

// Smallest `N0` with `P_m(N) <= λ_{N,m}` from `N0` on.
//
// # Safety
// `out` must be a valid pointer.
enum PsStatus ps_find_n0(uint32_t m, uint32_t *out);

// Integrates the radial problem with data `a[0..m]`. `r_max <= 0` selects the default radius.
//
// # Safety
// `a` must hold `a_len` values; `out` must be a valid pointer.
enum PsStatus ps_integrate(uint32_t m,
                           uint32_t n,
                           const double *a,
                           size_t a_len,
                           double r_max,
                           struct PsProfile **out);

// # Safety
// `p` must come from `ps_integrate` and not be used afterwards.
void ps_profile_free(struct PsProfile *p);

// Number of grid nodes.
//
// # Safety
// `p` must be a live handle.
size_t ps_profile_len(const struct PsProfile *p);

// `global` is 1 for a global profile, 0 for blow-up; `radius` is `r_max` or the blow-up radius.
//
// # Safety
// All pointers must be valid.
enum PsStatus ps_profile_status(const struct PsProfile *p, int32_t *global, double *radius);

// Copies the radial grid (`ps_profile_len` values).
//
// # Safety
// `buf` must hold `len` values.
enum PsStatus ps_profile_grid(const struct PsProfile *p, double *buf, size_t len);

// Copies `v_k = (-Δ)^k u` at the grid nodes.
//
// # Safety
// `buf` must hold `len` values.
enum PsStatus ps_profile_component(const struct PsProfile *p, uint32_t k, double *buf, size_t len);

// Interpolated `v_0..v_{m-1}` at radius `r` into `buf[0..m]`.
//
// # Safety
// `buf` must hold `len >= m` values.
enum PsStatus ps_profile_evaluate(const struct PsProfile *p, double r, double *buf, size_t len);

// Pointwise certificate `sup e^u r^{2m} <= γ` of a global profile.
//
// # Safety
// `out` must be a valid pointer.
enum PsStatus ps_profile_certificate(const struct PsProfile *p, struct PsCertificate *out);

// Bracket `[lo, hi]` of the borderline `a_{m-1}` (even `m`) for the given head `a_0..a_{m-2}`.
//
// # Safety
// `head` must hold `head_len` values; `lo`, `hi` must be valid.
enum PsStatus ps_find_borderline(uint32_t m,
                                 uint32_t n,
                                 const double *head,
                                 size_t head_len,
                                 double tol,
                                 double *lo,
                                 double *hi);

// Monotone iteration for radial `P = Σ b_k r^{2k}`. A NaN `c` selects `C̃_P`;
// `nodes == 0` selects the default grid.
//
// # Safety
// `coeffs` must hold `n_coeffs` values; `out` must be valid.
enum PsStatus ps_monotone_iterate(uint32_t m,
                                  uint32_t n,
                                  const double *coeffs,
                                  size_t n_coeffs,
                                  double c,
                                  size_t nodes,
                                  struct PsIterate **out);

// # Safety
// `it` must come from `ps_monotone_iterate` and not be used afterwards.
void ps_iterate_free(struct PsIterate *it);

// Extracted initial data `a_0..a_{m-1}` into `buf`.
//
// # Safety
// `buf` must hold `len >= m` values.
enum PsStatus ps_iterate_initial_data(const struct PsIterate *it, double *buf, size_t len);

// Constant `C`, final residual, sweep count, and whether `0 <= z <= W_m` held.
//
// # Safety
// All pointers must be valid.
enum PsStatus ps_iterate_summary(const struct PsIterate *it,
                                 double *c,
                                 double *residual,
                                 size_t *iterations,
                                 int32_t *sandwich);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYSTAB_H */
