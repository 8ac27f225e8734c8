#ifndef PERIHELIA_H
#define PERIHELIA_H

/* Generated by cbindgen from the perihelia-ffi crate. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum PeriStatus {
  PERI_STATUS_OK = 0,
  PERI_STATUS_NULL_POINTER = 1,
  PERI_STATUS_INVALID_INPUT = 2,
  PERI_STATUS_DOMAIN_VIOLATION = 3,
  PERI_STATUS_DEGENERATE_GEOMETRY = 4,
  PERI_STATUS_NO_CONVERGENCE = 5,
  PERI_STATUS_COLLISION = 6,
  PERI_STATUS_ORBIT_CROSSING = 7,
  PERI_STATUS_ILL_CONDITIONED = 8,
  PERI_STATUS_CAP_EXCEEDED = 9,
  PERI_STATUS_BUFFER_TOO_SMALL = 10,
  PERI_STATUS_PANIC = 11,
} PeriStatus;

// Opaque handle to a validated central mass, planet masses and mass ratio.
typedef struct PeriMassSystem PeriMassSystem;

// Arguments of a quadrupole closed form for the pair `(i, i+1)`.
typedef struct PeriQuadrupoleArgs {
  double theta;
  double vartheta;
  double chi_prev;
  double chi;
  double chi_next;
  double lambda;
  double lambda_next;
  double a;
  double a_next;
  double m;
  double m_next;
} PeriQuadrupoleArgs;

// Point at which the secular coefficients of planet `i` are evaluated.
typedef struct PeriSecularPoint {
  double chi_prev;
  double chi;
  // Zero for the outermost planet.
  double chi_next;
  double lambda;
  double lambda_next;
  double a;
  double a_next;
  double m;
  double m_next;
} PeriSecularPoint;

// Elliptic-equilibrium coefficients of the quadrupole term.
typedef struct PeriSecularCoeffs {
  double beta;
  double amplitude;
  double energy;
  double omega;
  double tau;
  double tau1;
  double tau2;
  double tau3;
} PeriSecularCoeffs;

// Summary of a Diophantine check.
typedef struct PeriDiophantineResult {
  bool pass;
  // `|ω·k| − γ_j / |k|₁^τ` at the reported lattice vector.
  double margin;
  // Number of lattice vectors examined.
  uint64_t checked;
} PeriDiophantineResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a NUL-terminated
// string, truncating if needed. Returns the full message length in bytes
// (excluding the terminator); an empty string means the last call succeeded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t peri_last_error_message(char *buf, uintptr_t len);

// Creates a mass system with central mass `m0`, `n` planet masses scaled by
// `mu`. The handle must be released with [`peri_mass_system_free`].
//
// # Safety
// `masses` must point to `n` readable values and `out` to a writable pointer.
enum PeriStatus peri_mass_system_new(double m0,
                                     const double *masses,
                                     uintptr_t n,
                                     double mu,
                                     struct PeriMassSystem **out);

// Releases a handle from [`peri_mass_system_new`]. Null is ignored.
//
// # Safety
// `ms` must be null or a live handle not used afterwards.
void peri_mass_system_free(struct PeriMassSystem *ms);

// Number of planets of the system, or 0 for a null handle.
//
// # Safety
// `ms` must be null or a live handle.
uintptr_t peri_mass_system_planets(const struct PeriMassSystem *ms);

// Maps P coordinates to the Cartesian state.
//
// # Safety
// `coords` must point to `len` values and `state` to `state_len` writable values.
enum PeriStatus peri_p_map(const struct PeriMassSystem *ms,
                           const double *coords,
                           uintptr_t len,
                           double *state,
                           uintptr_t state_len);

// Maps a Cartesian state to P coordinates.
//
// # Safety
// `state` must point to `len` values and `coords` to `coords_len` writable values.
enum PeriStatus peri_p_map_inverse(const struct PeriMassSystem *ms,
                                   const double *state,
                                   uintptr_t len,
                                   double *coords,
                                   uintptr_t coords_len);

// Maps Delaunay coordinates to the Cartesian state.
//
// # Safety
// `coords` must point to `len` values and `state` to `state_len` writable values.
enum PeriStatus peri_delaunay_map(const struct PeriMassSystem *ms,
                                  const double *coords,
                                  uintptr_t len,
                                  double *state,
                                  uintptr_t state_len);

// Maps a Cartesian state to Delaunay coordinates.
//
// # Safety
// `state` must point to `len` values and `coords` to `coords_len` writable values.
enum PeriStatus peri_delaunay_map_inverse(const struct PeriMassSystem *ms,
                                          const double *state,
                                          uintptr_t len,
                                          double *coords,
                                          uintptr_t coords_len);

// Solves `ζ − e sin ζ = ℓ` for `0 <= e < 1` on the lifted branch.
//
// # Safety
// `zeta` must point to a writable value.
enum PeriStatus peri_solve_kepler(double ecc, double ell, double *zeta);

// Radius of convergence in `e` of the Kepler series (the Laplace limit).
double peri_levi_civita_limit(void);

// Evaluates a quadrupole closed form; `kind` is a [`PeriQuadrupoleKind`] value.
//
// # Safety
// `args` must point to a readable struct and `value` to a writable value.
enum PeriStatus peri_quadrupole(int32_t kind, const struct PeriQuadrupoleArgs *args, double *value);

// Closed-form secular coefficients at `point`.
//
// # Safety
// `point` must point to a readable struct and `out` to a writable one.
enum PeriStatus peri_secular_coefficients(const struct PeriSecularPoint *point,
                                          struct PeriSecularCoeffs *out);

// Checks the multi-scale Diophantine condition on `0 < |k|₁ <= k_max`.
// The frequency vector is split into `n_blocks` consecutive blocks of sizes
// `blocks` with constants `gammas`. The worst lattice vector (the first
// violation when failing) is written to `worst_k`, which must hold `dim` values.
//
// # Safety
// Pointers must reference arrays of the stated lengths; `out` must be writable.
enum PeriStatus peri_diophantine_check(const double *omega,
                                       uintptr_t dim,
                                       const uintptr_t *blocks,
                                       const double *gammas,
                                       uintptr_t n_blocks,
                                       double tau,
                                       uint32_t k_max,
                                       struct PeriDiophantineResult *out,
                                       int64_t *worst_k,
                                       uintptr_t worst_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERIHELIA_H */
