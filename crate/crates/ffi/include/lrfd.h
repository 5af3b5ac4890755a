#ifndef LRFD_H
#define LRFD_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum LrfdStatus {
  LRFD_STATUS_OK = 0,
  LRFD_STATUS_NULL_POINTER = 1,
  LRFD_STATUS_DIMENSION_MISMATCH = 2,
  LRFD_STATUS_NON_FINITE = 3,
  LRFD_STATUS_INVALID_PARAMETER = 4,
  LRFD_STATUS_NO_CONVERGENCE = 5,
  LRFD_STATUS_EMPTY_DICTIONARY = 6,
  LRFD_STATUS_DEGENERATE_ESTIMATE = 7,
  LRFD_STATUS_ZERO_MATRIX = 8,
  LRFD_STATUS_NEUMANN_DIVERGES = 9,
  LRFD_STATUS_PARSE = 10,
  LRFD_STATUS_IO = 11,
  LRFD_STATUS_PANIC = 12,
} LrfdStatus;

// Set of observed entries.
typedef struct LrfdMask LrfdMask;

// Dense real matrix.
typedef struct LrfdMatrix LrfdMatrix;

// Outcome of a solve.
typedef struct LrfdReport LrfdReport;

// Solver settings; start from [`lrfd_solver_options_default`].
typedef struct LrfdSolverOptions {
  double lambda;
  size_t max_iters;
  double rel_tol;
  bool acceleration;
  bool continuation;
} LrfdSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length plus one.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t lrfd_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *lrfd_version(void);

// Creates a `rows × cols` matrix from row-major `data`, or a zero matrix if
// `data` is null.
//
// # Safety
// `data` must be null or point to `rows * cols` doubles; `out` must be valid.
enum LrfdStatus lrfd_matrix_new(size_t rows,
                                size_t cols,
                                const double *data,
                                struct LrfdMatrix **out);

// # Safety
// `m` must be null or a handle from this library, not yet freed.
void lrfd_matrix_free(struct LrfdMatrix *m);

// Number of rows, 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t lrfd_matrix_rows(const struct LrfdMatrix *m);

// Number of columns, 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t lrfd_matrix_cols(const struct LrfdMatrix *m);

// Copies the entries in row-major order into `buf`, which holds `len`
// doubles; `len` must equal `rows * cols`.
//
// # Safety
// `m` must be a live handle and `buf` must point to `len` doubles.
enum LrfdStatus lrfd_matrix_copy_to(const struct LrfdMatrix *m, double *buf, size_t len);

// # Safety
// `m` must be a live handle and `out` valid.
enum LrfdStatus lrfd_matrix_get(const struct LrfdMatrix *m, size_t i, size_t j, double *out);

// Reads a matrix file (`rows,cols` header, one row per line).
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid.
enum LrfdStatus lrfd_matrix_load(const char *path, struct LrfdMatrix **out);

// # Safety
// `m` must be a live handle and `path` a NUL-terminated string.
enum LrfdStatus lrfd_matrix_save(const struct LrfdMatrix *m, const char *path);

// Observes exactly `round(fraction · rows · cols)` entries chosen
// uniformly.
//
// # Safety
// `out` must be valid.
enum LrfdStatus lrfd_mask_sample_fraction(size_t rows,
                                          size_t cols,
                                          double fraction,
                                          uint64_t seed,
                                          struct LrfdMask **out);

// Observes each entry independently with probability `rho`.
//
// # Safety
// `out` must be valid.
enum LrfdStatus lrfd_mask_bernoulli(size_t rows,
                                    size_t cols,
                                    double rho,
                                    uint64_t seed,
                                    struct LrfdMask **out);

// Mask from `count` explicit `(row_idx[k], col_idx[k])` pairs.
//
// # Safety
// `row_idx` and `col_idx` must point to `count` values each (or be null
// when `count` is 0); `out` must be valid.
enum LrfdStatus lrfd_mask_from_indices(size_t rows,
                                       size_t cols,
                                       const size_t *row_idx,
                                       const size_t *col_idx,
                                       size_t count,
                                       struct LrfdMask **out);

// Number of observed entries, 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t lrfd_mask_len(const struct LrfdMask *m);

// # Safety
// `m` must be null or a live handle.
bool lrfd_mask_contains(const struct LrfdMask *m, size_t i, size_t j);

// Reads a mask file (`rows,cols,count` header, one `i,j` per line).
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid.
enum LrfdStatus lrfd_mask_load(const char *path, struct LrfdMask **out);

// # Safety
// `m` must be a live handle and `path` a NUL-terminated string.
enum LrfdStatus lrfd_mask_save(const struct LrfdMask *m, const char *path);

// # Safety
// `m` must be null or a handle from this library, not yet freed.
void lrfd_mask_free(struct LrfdMask *m);

// `λ = 100`, 5000 iterations, relative tolerance 1e-7, momentum and
// continuation on.
struct LrfdSolverOptions lrfd_solver_options_default(void);

// Nuclear-norm completion of `x` on `mask`. `opts` may be null for the
// defaults.
//
// # Safety
// Handles must be live; `out` must be valid.
enum LrfdStatus lrfd_solve_cono(const struct LrfdMatrix *x,
                                const struct LrfdMask *mask,
                                const struct LrfdSolverOptions *opts,
                                struct LrfdReport **out);

// Completion constrained to `A·Z` with dictionary `a`.
//
// # Safety
// Handles must be live; `out` must be valid.
enum LrfdStatus lrfd_solve_lrfd(const struct LrfdMatrix *x,
                                const struct LrfdMatrix *a,
                                const struct LrfdMask *mask,
                                const struct LrfdSolverOptions *opts,
                                struct LrfdReport **out);

// Two-stage completion: nuclear-norm estimate, rank-truncated and
// normalized into a dictionary, then the dictionary solve. The report
// describes the second stage; its reconstruction is the final estimate.
//
// # Safety
// Handles must be live; `out` must be valid.
enum LrfdStatus lrfd_run_two_stage(const struct LrfdMatrix *x,
                                   const struct LrfdMask *mask,
                                   const struct LrfdSolverOptions *opts,
                                   struct LrfdReport **out);

// Copy of the solution (`L*` or `Z*`).
//
// # Safety
// `r` must be a live report; `out` must be valid.
enum LrfdStatus lrfd_report_solution(const struct LrfdReport *r, struct LrfdMatrix **out);

// Copy of the recovered matrix (`L*` or `A·Z*`).
//
// # Safety
// `r` must be a live report; `out` must be valid.
enum LrfdStatus lrfd_report_reconstruction(const struct LrfdReport *r, struct LrfdMatrix **out);

// # Safety
// `r` must be null or a live report.
size_t lrfd_report_iterations(const struct LrfdReport *r);

// # Safety
// `r` must be null or a live report.
bool lrfd_report_converged(const struct LrfdReport *r);

// Objective at the solution; NaN for a null handle.
//
// # Safety
// `r` must be null or a live report.
double lrfd_report_objective(const struct LrfdReport *r);

// `‖P_Ω(X − reconstruction)‖_F`; NaN for a null handle.
//
// # Safety
// `r` must be null or a live report.
double lrfd_report_residual_norm(const struct LrfdReport *r);

// Learnt dictionary rank of a two-stage report, 0 otherwise.
//
// # Safety
// `r` must be null or a live report.
size_t lrfd_report_rank_estimate(const struct LrfdReport *r);

// # Safety
// `r` must be null or a handle from this library, not yet freed.
void lrfd_report_free(struct LrfdReport *r);

// Column- and row-space coherence and the rank they were computed at.
//
// # Safety
// `m` must be live; the outputs must be valid.
enum LrfdStatus lrfd_coherence(const struct LrfdMatrix *m, double *mu1, double *mu2, size_t *rank);

// `‖estimate − truth‖_F / ‖truth‖_F`.
//
// # Safety
// Handles must be live; `out` must be valid.
enum LrfdStatus lrfd_recovery_error(const struct LrfdMatrix *estimate,
                                    const struct LrfdMatrix *truth,
                                    double *out);

// Singular value soft-thresholding at `tau`.
//
// # Safety
// `m` must be live; `out` must be valid.
enum LrfdStatus lrfd_svt(const struct LrfdMatrix *m, double tau, struct LrfdMatrix **out);

// Moore–Penrose pseudo-inverse.
//
// # Safety
// `m` must be live; `out` must be valid.
enum LrfdStatus lrfd_pinv(const struct LrfdMatrix *m, struct LrfdMatrix **out);

// Union of `subspaces` random subspaces with `rank / subspaces` dimensions
// each and `cols / subspaces` points per subspace.
//
// # Safety
// `out` must be valid.
enum LrfdStatus lrfd_gen_subspace_mixture(size_t rows,
                                          size_t cols,
                                          size_t subspaces,
                                          size_t rank,
                                          uint64_t seed,
                                          struct LrfdMatrix **out);

// `n × n` matrix with an all-ones first column and zeros elsewhere.
//
// # Safety
// `out` must be valid.
enum LrfdStatus lrfd_gen_coherent_rank1(size_t n, struct LrfdMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRFD_H */
