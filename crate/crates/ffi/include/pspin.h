#ifndef PSPIN_H
#define PSPIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum PspinStatus {
  PSPIN_STATUS_OK = 0,
  PSPIN_STATUS_NULL_POINTER = 1,
  PSPIN_STATUS_INVALID_MIXTURE = 2,
  PSPIN_STATUS_DOMAIN = 3,
  PSPIN_STATUS_NOT_CONVERGED = 4,
  PSPIN_STATUS_CAPACITY = 5,
  PSPIN_STATUS_DIMENSION_MISMATCH = 6,
  PSPIN_STATUS_PRECONDITION = 7,
  PSPIN_STATUS_NUMERICAL = 8,
  PSPIN_STATUS_PANIC = 9,
} PspinStatus;

// One sampled disorder instance.
typedef struct PspinHamiltonian PspinHamiltonian;

// A validated mixture ξ(x) = Σ γ_p² x^p.
typedef struct PspinMixture PspinMixture;

// A converged zero-temperature solution.
typedef struct PspinSolution PspinSolution;

// Scalar summary of a solution.
typedef struct PspinPrediction {
  double gs;
  double l;
  double zhat1;
  double r;
  double lambda_plus;
  double lambda_minus;
  // 1 when the profile is full RSB at q = 1, else 0.
  int32_t full_rsb_endpoint;
} PspinPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pspin_version(void);

// Copies the last error message of this thread into `buf` (truncated and
// always NUL-terminated when `len > 0`). Returns the full message length
// in bytes, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t pspin_last_error(char *buf, uintptr_t len);

// Builds a mixture from `len` pairs (degree, γ_p).
//
// # Safety
// `degrees` and `gammas` must point to `len` readable elements and `out`
// to a writable handle slot.
enum PspinStatus pspin_mixture_new(const uint32_t *degrees,
                                   const double *gammas,
                                   uintptr_t len,
                                   struct PspinMixture **out);

// # Safety
// `m` must be null or a handle from [`pspin_mixture_new`] not yet freed.
void pspin_mixture_free(struct PspinMixture *m);

// Evaluates the `order`-th derivative of ξ at `q` in [0, 1].
//
// # Safety
// `m` must be a live mixture handle and `out` writable.
enum PspinStatus pspin_mixture_xi(const struct PspinMixture *m,
                                  double q,
                                  uint32_t order,
                                  double *out);

// Minimizes the zero-temperature functional on `cells` grid cells
// (0 selects the default of 1000).
//
// # Safety
// `m` must be a live mixture handle and `out` a writable handle slot.
enum PspinStatus pspin_solve(const struct PspinMixture *m,
                             uintptr_t cells,
                             struct PspinSolution **out);

// # Safety
// `s` must be null or a handle from [`pspin_solve`] not yet freed.
void pspin_solution_free(struct PspinSolution *s);

// # Safety
// `s` must be a live solution handle and `out` writable.
enum PspinStatus pspin_solution_prediction(const struct PspinSolution *s,
                                           struct PspinPrediction *out);

// Number of grid nodes (cells + 1) of the solution profile.
//
// # Safety
// `s` must be a live solution handle.
uintptr_t pspin_solution_len(const struct PspinSolution *s);

// Copies up to `len` values of ẑ on the uniform grid into `buf`.
// Returns the number written.
//
// # Safety
// `s` must be a live solution handle and `buf` point to `len` writable doubles.
uintptr_t pspin_solution_zhat(const struct PspinSolution *s, double *buf, uintptr_t len);

// Two-replica bound at overlap 1 − ε (`replicas` = 2) or the three-replica
// bound at ε (`replicas` = 3), using the solution's order parameter.
//
// # Safety
// `m` and `s` must be live handles for the same mixture and `out` writable.
enum PspinStatus pspin_replica_bound(const struct PspinMixture *m,
                                     const struct PspinSolution *s,
                                     uint32_t replicas,
                                     double eps,
                                     double *out);

// Samples an instance of dimension `n` with the given seed.
//
// # Safety
// `m` must be a live mixture handle and `out` a writable handle slot.
enum PspinStatus pspin_hamiltonian_sample(const struct PspinMixture *m,
                                          uintptr_t n,
                                          uint64_t seed,
                                          struct PspinHamiltonian **out);

// # Safety
// `h` must be null or a handle from [`pspin_hamiltonian_sample`] not yet freed.
void pspin_hamiltonian_free(struct PspinHamiltonian *h);

// Evaluates H at `x` (length `len`, which must equal the dimension).
// Optionally writes the Euclidean gradient into `grad` when it is non-null.
//
// # Safety
// `h` must be a live handle, `x` point to `len` doubles, `grad` be null or
// point to `len` writable doubles, and `value` be writable.
enum PspinStatus pspin_hamiltonian_eval(const struct PspinHamiltonian *h,
                                        const double *x,
                                        uintptr_t len,
                                        double *value,
                                        double *grad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSPIN_H */
