#ifndef UFRAME_H
#define UFRAME_H

/* Generated by cbindgen from the uframe-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by every fallible call.
typedef enum UfStatus {
  UF_STATUS_OK = 0,
  UF_STATUS_NULL_POINTER = 1,
  UF_STATUS_INVALID_ARGUMENT = 2,
  UF_STATUS_SHAPE_MISMATCH = 3,
  UF_STATUS_NOT_HERMITIAN = 4,
  UF_STATUS_NOT_PSD = 5,
  UF_STATUS_SINGULAR = 6,
  UF_STATUS_INVALID_STATE = 7,
  UF_STATUS_INVALID_POVM = 8,
  UF_STATUS_NOT_A_FRAME = 9,
  UF_STATUS_INVALID_PROBABILITIES = 10,
  UF_STATUS_VANISHING_OVERLAP = 11,
  UF_STATUS_EMPTY = 12,
  UF_STATUS_IO = 13,
} UfStatus;

// Density matrix (opaque).
typedef struct UfDensity UfDensity;

// Dual frame (opaque).
typedef struct UfDual UfDual;

// Operator frame (opaque).
typedef struct UfFrame UfFrame;

// Dense complex matrix (opaque).
typedef struct UfMatrix UfMatrix;

// Hermitian observable (opaque).
typedef struct UfObservable UfObservable;

// Positive operator valued measure (opaque).
typedef struct UfPovm UfPovm;

// Discrete Weyl-Heisenberg system (opaque).
typedef struct UfWeyl UfWeyl;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. Borrowed;
// valid until the next failing uframe call on the same thread.
const char *uframe_last_error_message(void);

// Library version as a static string.
const char *uframe_version(void);

// Creates a matrix from row-major re/im arrays of length `rows × cols`.
//
// # Safety
// `re` and `im` must point to `rows × cols` readable doubles.
enum UfStatus uframe_matrix_new(size_t rows,
                                size_t cols,
                                const double *re,
                                const double *im,
                                struct UfMatrix **out);

// The n-by-n identity matrix.
enum UfStatus uframe_matrix_identity(size_t n, struct UfMatrix **out);

void uframe_matrix_free(struct UfMatrix *m);

// Number of rows; 0 for a null handle.
size_t uframe_matrix_rows(const struct UfMatrix *m);

// Number of columns; 0 for a null handle.
size_t uframe_matrix_cols(const struct UfMatrix *m);

// Copies the entries out in row-major order.
//
// # Safety
// `re` and `im` must point to `rows × cols` writable doubles.
enum UfStatus uframe_matrix_copy_data(const struct UfMatrix *m, double *re, double *im);

// A Haar-random unitary drawn from a fresh seeded stream.
enum UfStatus uframe_haar_unitary(size_t d, uint64_t seed, struct UfMatrix **out);

// Validates and wraps a density matrix given by row-major re/im arrays.
//
// # Safety
// `re` and `im` must point to `dim × dim` readable doubles.
enum UfStatus uframe_density_new(size_t dim,
                                 const double *re,
                                 const double *im,
                                 struct UfDensity **out);

// The pure basis state `|k⟩⟨k|`.
enum UfStatus uframe_density_pure_basis(size_t dim, size_t k, struct UfDensity **out);

// The maximally mixed state `I/d`.
enum UfStatus uframe_density_maximally_mixed(size_t dim, struct UfDensity **out);

// A state of prescribed purity `Tr[ρ²] = p` with `1/d < p ≤ 1`.
enum UfStatus uframe_density_with_purity(size_t dim, double purity, struct UfDensity **out);

void uframe_density_free(struct UfDensity *d);

// `Tr[ρ²]`; NaN for a null handle.
double uframe_density_purity(const struct UfDensity *d);

// Validates and wraps a Hermitian observable.
//
// # Safety
// `re` and `im` must point to `dim × dim` readable doubles.
enum UfStatus uframe_observable_hermitian(size_t dim,
                                          const double *re,
                                          const double *im,
                                          struct UfObservable **out);

void uframe_observable_free(struct UfObservable *o);

enum UfStatus uframe_weyl_new(size_t d, struct UfWeyl **out);

void uframe_weyl_free(struct UfWeyl *w);

// Number of unitaries (`d²`); 0 for a null handle.
size_t uframe_weyl_len(const struct UfWeyl *w);

// Copies out the unitary with flat index `alpha = a·d + b`.
enum UfStatus uframe_weyl_unitary(const struct UfWeyl *w, size_t alpha, struct UfMatrix **out);

// The commutation cocycle `c(alpha, beta)`.
enum UfStatus uframe_weyl_cocycle(const struct UfWeyl *w, size_t alpha, size_t beta, double *out);

// The orthogonal `d²`-outcome Bell POVM of the system.
enum UfStatus uframe_weyl_bell_povm(const struct UfWeyl *w, struct UfPovm **out);

// The Hermitized group-generated ancilla for dimension `d`.
enum UfStatus uframe_abelian_ancilla(size_t d, struct UfDensity **out);

// The unique closed-form dual of the Weyl frame for ancilla `nu`.
enum UfStatus uframe_abelian_dual(const struct UfWeyl *w,
                                  const struct UfDensity *nu,
                                  struct UfDual **out);

// The induced Weyl system frame `Ξ_α[ν] = (1/d) U_α ν^τ U_α†`.
enum UfStatus uframe_weyl_xi_frame(const struct UfWeyl *w,
                                   const struct UfDensity *nu,
                                   struct UfFrame **out);

// SU(d) scalar parameters `(p, a, b)` for an ancilla.
enum UfStatus uframe_sud_params(const struct UfDensity *nu,
                                double *out_p,
                                double *out_a,
                                double *out_b);

// The optimal covariant dual generator `ξ = a ν^τ + b I` as a matrix.
enum UfStatus uframe_sud_canonical_dual_xi(const struct UfDensity *nu, struct UfMatrix **out);

// Whether `ξ` generates a covariant dual for `ν` (both trace constraints).
enum UfStatus uframe_covariant_dual_check(const struct UfMatrix *xi,
                                          const struct UfDensity *nu,
                                          bool *out);

// Builds and validates a POVM from `count` element matrices. Pass
// `dim_h = dim_k = 0` for a single-system POVM, or a factorization
// `dim_h × dim_k = dim` to record a bipartite split.
//
// # Safety
// `elements` must point to `count` readable non-null matrix handles.
enum UfStatus uframe_povm_new(size_t dim_h,
                              size_t dim_k,
                              size_t count,
                              const struct UfMatrix *const *elements,
                              struct UfPovm **out);

void uframe_povm_free(struct UfPovm *p);

// Number of outcomes; 0 for a null handle.
size_t uframe_povm_len(const struct UfPovm *p);

// Copies out one POVM element.
enum UfStatus uframe_povm_element(const struct UfPovm *p, size_t index, struct UfMatrix **out);

// Validation report: completeness defect and the smallest element
// eigenvalue.
enum UfStatus uframe_povm_validate(const struct UfPovm *p,
                                   double *out_completeness_defect,
                                   double *out_min_eigenvalue);

// Informational completeness of a single-system POVM.
enum UfStatus uframe_povm_is_info_complete(const struct UfPovm *p, double tol, bool *out);

// Universality of a bipartite POVM for ancilla `nu`.
enum UfStatus uframe_povm_is_universal(const struct UfPovm *p,
                                       const struct UfDensity *nu,
                                       double tol,
                                       bool *out);

// The induced system frame `Ξ_i[ν]` of a bipartite POVM.
enum UfStatus uframe_povm_xi_frame(const struct UfPovm *p,
                                   const struct UfDensity *nu,
                                   struct UfFrame **out);

// Normalizes a frame of positive operators into an info-complete POVM via
// `S^{-1/2} K_i S^{-1/2}`.
//
// # Safety
// `elements` must point to `count` readable non-null matrix handles.
enum UfStatus uframe_info_complete_from_positive(size_t count,
                                                 const struct UfMatrix *const *elements,
                                                 struct UfPovm **out);

// Builds a frame from `count` same-shape operator matrices.
//
// # Safety
// `elements` must point to `count` readable non-null matrix handles.
enum UfStatus uframe_frame_new(size_t count,
                               const struct UfMatrix *const *elements,
                               struct UfFrame **out);

void uframe_frame_free(struct UfFrame *f);

// Number of frame elements; 0 for a null handle.
size_t uframe_frame_len(const struct UfFrame *f);

// Frame bounds `(a, b)`: the extreme eigenvalues of the frame operator.
enum UfStatus uframe_frame_bounds(const struct UfFrame *f, double *out_lower, double *out_upper);

// Whether the set is a frame at relative condition tolerance `tol`.
enum UfStatus uframe_frame_is_frame(const struct UfFrame *f, double tol, bool *out);

// The canonical dual `Θ_i = F⁻¹ Ξ_i`; fails on singular frame operators.
enum UfStatus uframe_frame_canonical_dual(const struct UfFrame *f, struct UfDual **out);

void uframe_dual_free(struct UfDual *d);

// Number of dual elements; 0 for a null handle.
size_t uframe_dual_len(const struct UfDual *d);

// Copies out one dual element.
enum UfStatus uframe_dual_element(const struct UfDual *d, size_t index, struct UfMatrix **out);

// Frobenius defect of the completeness relation for a frame/dual pair.
enum UfStatus uframe_completeness_defect(const struct UfFrame *f,
                                         const struct UfDual *d,
                                         double *out);

// Expands `a` in the frame: writes the `frame_len` complex coefficients
// `Tr[Θ_i† A]` into `coeff_re`/`coeff_im` and the reconstruction error
// `‖Σ_i c_i Ξ_i − A‖_F` into `out_error`.
//
// # Safety
// `coeff_re` and `coeff_im` must point to `uframe_frame_len(f)` writable
// doubles.
enum UfStatus uframe_frame_expand(const struct UfFrame *f,
                                  const struct UfDual *d,
                                  const struct UfMatrix *a,
                                  double *coeff_re,
                                  double *coeff_im,
                                  double *out_error);

// Processing coefficients `f_i = Tr[Θ_i† O]` for every dual element.
//
// # Safety
// `out_re` and `out_im` must point to `uframe_dual_len(d)` writable doubles.
enum UfStatus uframe_processing_function(const struct UfDual *d,
                                         const struct UfObservable *o,
                                         double *out_re,
                                         double *out_im);

// The exact detector estimate `Σ_i f_i Tr[(ρ⊗ν)Π_i]` for processing
// coefficients given as re/im arrays of length `uframe_povm_len(p)`.
//
// # Safety
// `f_re` and `f_im` must point to `uframe_povm_len(p)` readable doubles.
enum UfStatus uframe_estimate_expectation_exact(const struct UfDensity *rho,
                                                const struct UfDensity *nu,
                                                const struct UfPovm *p,
                                                const double *f_re,
                                                const double *f_im,
                                                double *out_re,
                                                double *out_im);

// Draws `n` seeded Born-rule outcomes into `out_outcomes`. Pass a null
// `nu` to measure a single-system POVM on `rho` alone.
//
// # Safety
// `out_outcomes` must point to `n` writable uint64 values.
enum UfStatus uframe_sample_outcomes(const struct UfDensity *rho,
                                     const struct UfDensity *nu,
                                     const struct UfPovm *p,
                                     size_t n,
                                     uint64_t seed,
                                     uint64_t *out_outcomes);

// Sample mean and standard error of `Re f` over recorded outcomes.
//
// # Safety
// `outcomes` must point to `n` readable uint64 values and `f_re` to
// `f_len` readable doubles.
enum UfStatus uframe_mc_estimate(const uint64_t *outcomes,
                                 size_t n,
                                 const double *f_re,
                                 size_t f_len,
                                 double *out_estimate,
                                 double *out_std_error);

// Closed-form Haar-averaged variance of the ideal measurement of `O`.
enum UfStatus uframe_delta_obs_analytic(const struct UfObservable *o, double *out);

// Closed-form covariant-dual variance for generator matrix `xi`.
enum UfStatus uframe_delta_xi_analytic(const struct UfMatrix *xi,
                                       const struct UfObservable *o,
                                       double *out);

// The optimal-dual noise coefficient `(d²+d−1−p)/(dp−1)`.
enum UfStatus uframe_delta_opt_analytic(double p, size_t d, double *out);

// Monte Carlo estimate of the ideal-measurement variance.
enum UfStatus uframe_delta_obs_mc(const struct UfObservable *o,
                                  size_t n,
                                  uint64_t seed,
                                  double *out_estimate,
                                  double *out_std_error);

// Monte Carlo estimate of the covariant-dual variance for generator `xi`.
enum UfStatus uframe_delta_xi_mc(const struct UfMatrix *xi,
                                 const struct UfDensity *nu,
                                 const struct UfObservable *o,
                                 size_t n_states,
                                 size_t n_group,
                                 uint64_t seed,
                                 double *out_estimate,
                                 double *out_std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UFRAME_H */
