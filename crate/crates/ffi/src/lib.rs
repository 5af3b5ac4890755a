//! C interface to `lrfd`.
//!
//! Matrices, masks and solver reports are opaque handles created and freed
//! by this library. Dense data crosses the boundary in row-major order.
//! Every fallible function returns an [`LrfdStatus`]; on failure the message
//! is kept per thread and can be read with [`lrfd_last_error_message`].
//! Output handles are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lrfd::coherence::{coherence, recovery_error};
use lrfd::linalg::io::{load_matrix, save_matrix};
use lrfd::linalg::{pinv, svt};
use lrfd::observation::{ObservationSet, SamplingModel};
use lrfd::pipeline::run_algorithm1_with;
use lrfd::solvers::{solve_cono, solve_lrfd, SolverConfig, SolverReport};
use lrfd::synth::{gen_coherent_rank1, gen_subspace_mixture, SubspaceMixSpec};
use lrfd::{DenseMatrix, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrfdStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    NonFinite = 3,
    InvalidParameter = 4,
    NoConvergence = 5,
    EmptyDictionary = 6,
    DegenerateEstimate = 7,
    ZeroMatrix = 8,
    NeumannDiverges = 9,
    Parse = 10,
    Io = 11,
    Panic = 12,
}

/// Dense real matrix.
pub struct LrfdMatrix(DenseMatrix);

/// Set of observed entries.
pub struct LrfdMask(ObservationSet);

/// Outcome of a solve.
pub struct LrfdReport {
    report: SolverReport,
    /// Learnt dictionary rank for the two-stage solve, 0 otherwise.
    rank_estimate: usize,
}

/// Solver settings; start from [`lrfd_solver_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LrfdSolverOptions {
    pub lambda: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub acceleration: bool,
    pub continuation: bool,
}

impl From<LrfdSolverOptions> for SolverConfig {
    fn from(o: LrfdSolverOptions) -> Self {
        SolverConfig {
            lambda: o.lambda,
            max_iters: o.max_iters,
            rel_tol: o.rel_tol,
            acceleration: o.acceleration,
            continuation: o.continuation,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> LrfdStatus {
    match e {
        Error::DimensionMismatch(_) => LrfdStatus::DimensionMismatch,
        Error::NonFinite { .. } => LrfdStatus::NonFinite,
        Error::InvalidParameter(_) => LrfdStatus::InvalidParameter,
        Error::SvdNoConvergence { .. } | Error::PowerIterationNoConvergence { .. } => LrfdStatus::NoConvergence,
        Error::EmptyDictionary => LrfdStatus::EmptyDictionary,
        Error::ZeroMatrix(_) => LrfdStatus::ZeroMatrix,
        Error::DegenerateEstimate => LrfdStatus::DegenerateEstimate,
        Error::NeumannDiverges { .. } => LrfdStatus::NeumannDiverges,
        Error::Parse { .. } => LrfdStatus::Parse,
        Error::Io(_) => LrfdStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LrfdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LrfdStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LrfdStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            LrfdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidParameter("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lrfd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrfd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Matrices

/// Creates a `rows × cols` matrix from row-major `data`, or a zero matrix if
/// `data` is null.
///
/// # Safety
/// `data` must be null or point to `rows * cols` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut LrfdMatrix,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidParameter("matrix too large".into()))?;
        let m = if data.is_null() {
            DenseMatrix::zeros(rows, cols)
        } else {
            DenseMatrix::from_row_major(rows, cols, std::slice::from_raw_parts(data, len))?
        };
        *out = boxed(LrfdMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_free(m: *mut LrfdMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of rows, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_rows(m: *const LrfdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Number of columns, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_cols(m: *const LrfdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the entries in row-major order into `buf`, which holds `len`
/// doubles; `len` must equal `rows * cols`.
///
/// # Safety
/// `m` must be a live handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_copy_to(m: *const LrfdMatrix, buf: *mut f64, len: usize) -> LrfdStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if len != m.rows() * m.cols() {
            return Err(Error::DimensionMismatch(format!("buffer holds {len}, matrix has {}", m.rows() * m.cols())).into());
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out[i * m.cols() + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_get(m: *const LrfdMatrix, i: usize, j: usize, out: *mut f64) -> LrfdStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if i >= m.rows() || j >= m.cols() {
            return Err(Error::InvalidParameter(format!("index ({i}, {j}) outside {}×{}", m.rows(), m.cols())).into());
        }
        *out_ptr(out, "out")? = m[(i, j)];
        Ok(())
    })
}

/// Reads a matrix file (`rows,cols` header, one row per line).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_load(path: *const c_char, out: *mut *mut LrfdMatrix) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = load_matrix(path_arg(path)?)?;
        *out = boxed(LrfdMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lrfd_matrix_save(m: *const LrfdMatrix, path: *const c_char) -> LrfdStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        save_matrix(m, path_arg(path)?)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Masks

/// Observes exactly `round(fraction · rows · cols)` entries chosen
/// uniformly.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_sample_fraction(
    rows: usize,
    cols: usize,
    fraction: f64,
    seed: u64,
    out: *mut *mut LrfdMask,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMask(ObservationSet::sample_fraction(rows, cols, fraction, seed)?));
        Ok(())
    })
}

/// Observes each entry independently with probability `rho`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_bernoulli(
    rows: usize,
    cols: usize,
    rho: f64,
    seed: u64,
    out: *mut *mut LrfdMask,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMask(ObservationSet::sample(rows, cols, SamplingModel::Bernoulli { rho }, seed)?));
        Ok(())
    })
}

/// Mask from `count` explicit `(row_idx[k], col_idx[k])` pairs.
///
/// # Safety
/// `row_idx` and `col_idx` must point to `count` values each (or be null
/// when `count` is 0); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_from_indices(
    rows: usize,
    cols: usize,
    row_idx: *const usize,
    col_idx: *const usize,
    count: usize,
    out: *mut *mut LrfdMask,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pairs = if count == 0 {
            Vec::new()
        } else {
            if row_idx.is_null() || col_idx.is_null() {
                return Err(Failure::Null("indices"));
            }
            let r = std::slice::from_raw_parts(row_idx, count);
            let c = std::slice::from_raw_parts(col_idx, count);
            r.iter().copied().zip(c.iter().copied()).collect()
        };
        *out = boxed(LrfdMask(ObservationSet::from_indices(rows, cols, pairs)?));
        Ok(())
    })
}

/// Number of observed entries, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_len(m: *const LrfdMask) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_contains(m: *const LrfdMask, i: usize, j: usize) -> bool {
    m.as_ref()
        .is_some_and(|m| i < m.0.rows() && j < m.0.cols() && m.0.contains(i, j))
}

/// Reads a mask file (`rows,cols,count` header, one `i,j` per line).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_load(path: *const c_char, out: *mut *mut LrfdMask) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = ObservationSet::load(path_arg(path)?)?;
        *out = boxed(LrfdMask(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_save(m: *const LrfdMask, path: *const c_char) -> LrfdStatus {
    guard(|| {
        deref(m, "mask")?.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lrfd_mask_free(m: *mut LrfdMask) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---------------------------------------------------------------------------
// Solvers

/// `λ = 100`, 5000 iterations, relative tolerance 1e-7, momentum and
/// continuation on.
#[no_mangle]
pub extern "C" fn lrfd_solver_options_default() -> LrfdSolverOptions {
    let d = SolverConfig::default();
    LrfdSolverOptions {
        lambda: d.lambda,
        max_iters: d.max_iters,
        rel_tol: d.rel_tol,
        acceleration: d.acceleration,
        continuation: d.continuation,
    }
}

unsafe fn options(opts: *const LrfdSolverOptions) -> SolverConfig {
    opts.as_ref().map_or_else(SolverConfig::default, |o| (*o).into())
}

/// Nuclear-norm completion of `x` on `mask`. `opts` may be null for the
/// defaults.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_solve_cono(
    x: *const LrfdMatrix,
    mask: *const LrfdMask,
    opts: *const LrfdSolverOptions,
    out: *mut *mut LrfdReport,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let report = solve_cono(&deref(x, "x")?.0, &deref(mask, "mask")?.0, &options(opts))?;
        *out = boxed(LrfdReport {
            report,
            rank_estimate: 0,
        });
        Ok(())
    })
}

/// Completion constrained to `A·Z` with dictionary `a`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_solve_lrfd(
    x: *const LrfdMatrix,
    a: *const LrfdMatrix,
    mask: *const LrfdMask,
    opts: *const LrfdSolverOptions,
    out: *mut *mut LrfdReport,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let report = solve_lrfd(
            &deref(x, "x")?.0,
            &deref(a, "a")?.0,
            &deref(mask, "mask")?.0,
            &options(opts),
        )?;
        *out = boxed(LrfdReport {
            report,
            rank_estimate: 0,
        });
        Ok(())
    })
}

/// Two-stage completion: nuclear-norm estimate, rank-truncated and
/// normalized into a dictionary, then the dictionary solve. The report
/// describes the second stage; its reconstruction is the final estimate.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_run_two_stage(
    x: *const LrfdMatrix,
    mask: *const LrfdMask,
    opts: *const LrfdSolverOptions,
    out: *mut *mut LrfdReport,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let res = run_algorithm1_with(&deref(x, "x")?.0, &deref(mask, "mask")?.0, &options(opts))?;
        *out = boxed(LrfdReport {
            report: res.lrfd_report,
            rank_estimate: res.rank_estimate,
        });
        Ok(())
    })
}

/// Copy of the solution (`L*` or `Z*`).
///
/// # Safety
/// `r` must be a live report; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_solution(r: *const LrfdReport, out: *mut *mut LrfdMatrix) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMatrix(deref(r, "report")?.report.solution.clone()));
        Ok(())
    })
}

/// Copy of the recovered matrix (`L*` or `A·Z*`).
///
/// # Safety
/// `r` must be a live report; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_reconstruction(r: *const LrfdReport, out: *mut *mut LrfdMatrix) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMatrix(deref(r, "report")?.report.reconstruction.clone()));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_iterations(r: *const LrfdReport) -> usize {
    r.as_ref().map_or(0, |r| r.report.iterations)
}

/// # Safety
/// `r` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_converged(r: *const LrfdReport) -> bool {
    r.as_ref().is_some_and(|r| r.report.converged)
}

/// Objective at the solution; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_objective(r: *const LrfdReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.report.objective)
}

/// `‖P_Ω(X − reconstruction)‖_F`; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_residual_norm(r: *const LrfdReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.report.residual_norm)
}

/// Learnt dictionary rank of a two-stage report, 0 otherwise.
///
/// # Safety
/// `r` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_rank_estimate(r: *const LrfdReport) -> usize {
    r.as_ref().map_or(0, |r| r.rank_estimate)
}

/// # Safety
/// `r` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lrfd_report_free(r: *mut LrfdReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

// ---------------------------------------------------------------------------
// Diagnostics and matrix functions

/// Column- and row-space coherence and the rank they were computed at.
///
/// # Safety
/// `m` must be live; the outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_coherence(
    m: *const LrfdMatrix,
    mu1: *mut f64,
    mu2: *mut f64,
    rank: *mut usize,
) -> LrfdStatus {
    guard(|| {
        let c = coherence(&deref(m, "matrix")?.0)?;
        *out_ptr(mu1, "mu1")? = c.mu1;
        *out_ptr(mu2, "mu2")? = c.mu2;
        *out_ptr(rank, "rank")? = c.rank_used;
        Ok(())
    })
}

/// `‖estimate − truth‖_F / ‖truth‖_F`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_recovery_error(
    estimate: *const LrfdMatrix,
    truth: *const LrfdMatrix,
    out: *mut f64,
) -> LrfdStatus {
    guard(|| {
        let e = recovery_error(&deref(estimate, "estimate")?.0, &deref(truth, "truth")?.0)?;
        *out_ptr(out, "out")? = e;
        Ok(())
    })
}

/// Singular value soft-thresholding at `tau`.
///
/// # Safety
/// `m` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_svt(m: *const LrfdMatrix, tau: f64, out: *mut *mut LrfdMatrix) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMatrix(svt(&deref(m, "matrix")?.0, tau)?));
        Ok(())
    })
}

/// Moore–Penrose pseudo-inverse.
///
/// # Safety
/// `m` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_pinv(m: *const LrfdMatrix, out: *mut *mut LrfdMatrix) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMatrix(pinv(&deref(m, "matrix")?.0)?));
        Ok(())
    })
}

/// Union of `subspaces` random subspaces with `rank / subspaces` dimensions
/// each and `cols / subspaces` points per subspace.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_gen_subspace_mixture(
    rows: usize,
    cols: usize,
    subspaces: usize,
    rank: usize,
    seed: u64,
    out: *mut *mut LrfdMatrix,
) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = SubspaceMixSpec::even(rows, cols, subspaces, rank, seed)?;
        *out = boxed(LrfdMatrix(gen_subspace_mixture(&spec)?));
        Ok(())
    })
}

/// `n × n` matrix with an all-ones first column and zeros elsewhere.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lrfd_gen_coherent_rank1(n: usize, out: *mut *mut LrfdMatrix) -> LrfdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(LrfdMatrix(gen_coherent_rank1(n)?));
        Ok(())
    })
}
