//! Proximal-gradient solvers for regularized nuclear-norm completion and
//! dictionary-based low-rank factor decomposition (LRFD).
//!
//! Both programs have the shape
//!
//! ```text
//! min_W ‖W‖_* + (λ/2) ‖P_Ω(X − B W)‖_F²
//! ```
//!
//! with `B = I` for plain completion and `B = A` for LRFD. One iteration is a
//! gradient step on the quadratic with step `1/(λ‖B‖²)` followed by singular
//! value thresholding at `1/(λ‖B‖²)`.

mod constrained;
mod engine;

pub use constrained::{
    constrained_config, solve_cono_constrained, solve_cono_constrained_with, solve_lrfd_constrained,
    solve_lrfd_constrained_with, CONSTRAINED_LAMBDA_MAX, CONSTRAINED_LAMBDA_START, CONSTRAINED_MAX_ITERS,
    CONSTRAINED_REL_TOL,
};
pub use engine::{solve_cono, solve_lrfd};

use crate::error::{Error, Result};
use crate::linalg::{svt, DenseMatrix};
use crate::observation::{project_omega, ObservationSet};

/// Parameters shared by both solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight `λ` of the data-fit term.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once `‖W⁺ − W‖_F / max(1, ‖W‖_F) ≤ rel_tol` at the target `λ`.
    pub rel_tol: f64,
    /// Nesterov momentum with function-value restart.
    pub acceleration: bool,
    /// Warm up through stages of smaller `λ`, tenfold apart, each run to a
    /// relative change of `max(rel_tol, 1e-5)`, before the target. Without
    /// it, large `λ` makes the threshold per step tiny and spurious singular
    /// values die out very slowly.
    pub continuation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            max_iters: 5000,
            rel_tol: 1e-7,
            acceleration: true,
            continuation: true,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    /// Plain proximal gradient at the target `λ` from the first iteration.
    pub fn plain(lambda: f64) -> Self {
        Self {
            lambda,
            acceleration: false,
            continuation: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a solve.
#[derive(Clone, Debug)]
pub struct SolverReport {
    /// `L*` for completion, `Z*` for LRFD.
    pub solution: DenseMatrix,
    /// Recovered matrix: `L*` itself, or `A · Z*`.
    pub reconstruction: DenseMatrix,
    /// Objective after every iteration, divided by the `λ` in force at that
    /// iteration: `‖W‖_*/λ + ½‖P_Ω(X − BW)‖_F²`. Dividing by `λ` keeps the
    /// sequence comparable while continuation raises `λ`; it is
    /// non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub terminal_relative_change: f64,
    pub converged: bool,
    /// `λ` of the program the solution belongs to.
    pub lambda: f64,
    /// Unscaled objective `‖W‖_* + (λ/2)‖P_Ω(X − BW)‖_F²` at the solution.
    pub objective: f64,
    /// `‖P_Ω(X − reconstruction)‖_F`.
    pub residual_norm: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `(λ/2) ‖P_Ω(X − L)‖_F²`.
pub fn cono_smooth_term(l: &DenseMatrix, x: &DenseMatrix, omega: &ObservationSet, lambda: f64) -> Result<f64> {
    let r = project_omega(&x.try_sub(l)?, omega)?;
    Ok(0.5 * lambda * r.inner(&r)?)
}

/// Gradient of [`cono_smooth_term`]: `λ P_Ω(L − X)`.
pub fn cono_smooth_gradient(
    l: &DenseMatrix,
    x: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
) -> Result<DenseMatrix> {
    Ok(project_omega(&l.try_sub(x)?, omega)?.scale(lambda))
}

/// `‖L‖_* + (λ/2) ‖P_Ω(X − L)‖_F²`.
pub fn cono_objective(l: &DenseMatrix, x: &DenseMatrix, omega: &ObservationSet, lambda: f64) -> Result<f64> {
    Ok(crate::linalg::norm(l, crate::NormKind::Nuclear)? + cono_smooth_term(l, x, omega, lambda)?)
}

/// One plain iteration `L ↦ svt(L + P_Ω(X − L), 1/λ)`.
pub fn cono_step(l: &DenseMatrix, x: &DenseMatrix, omega: &ObservationSet, lambda: f64) -> Result<DenseMatrix> {
    check_lambda(lambda)?;
    let mut g = l.clone();
    g.axpy_assign(1.0, &project_omega(&x.try_sub(l)?, omega)?)?;
    svt(&g, 1.0 / lambda)
}

/// `(λ/2) ‖P_Ω(X − AZ)‖_F²`.
pub fn lrfd_smooth_term(
    z: &DenseMatrix,
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
) -> Result<f64> {
    let r = project_omega(&x.try_sub(&a.matmul(z)?)?, omega)?;
    Ok(0.5 * lambda * r.inner(&r)?)
}

/// Gradient of [`lrfd_smooth_term`]: `−λ Aᵀ P_Ω(X − AZ)`.
pub fn lrfd_smooth_gradient(
    z: &DenseMatrix,
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
) -> Result<DenseMatrix> {
    let r = project_omega(&x.try_sub(&a.matmul(z)?)?, omega)?;
    Ok(a.t_matmul(&r)?.scale(-lambda))
}

/// `‖Z‖_* + (λ/2) ‖P_Ω(X − AZ)‖_F²`.
pub fn lrfd_objective(
    z: &DenseMatrix,
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
) -> Result<f64> {
    Ok(crate::linalg::norm(z, crate::NormKind::Nuclear)? + lrfd_smooth_term(z, x, a, omega, lambda)?)
}

/// One plain iteration
/// `Z ↦ svt(Z + (1/‖A‖²) Aᵀ P_Ω(X − AZ), 1/(λ‖A‖²))`.
pub fn lrfd_step(
    z: &DenseMatrix,
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
    a_norm_sq: f64,
) -> Result<DenseMatrix> {
    check_lambda(lambda)?;
    if !(a_norm_sq > 0.0) {
        return Err(Error::EmptyDictionary);
    }
    let r = project_omega(&x.try_sub(&a.matmul(z)?)?, omega)?;
    let mut g = z.clone();
    g.axpy_assign(1.0 / a_norm_sq, &a.t_matmul(&r)?)?;
    svt(&g, 1.0 / (lambda * a_norm_sq))
}

/// Fixed-point residual of completion, normalized as
/// `‖cono_step(L) − L‖_F / max(1, ‖λ P_Ω(X − L)‖_F)`.
pub fn cono_fixed_point_residual(
    l: &DenseMatrix,
    x: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
) -> Result<f64> {
    let next = cono_step(l, x, omega, lambda)?;
    let grad = cono_smooth_gradient(l, x, omega, lambda)?;
    Ok(next.distance(l)? / grad.frobenius_norm().max(1.0))
}

/// Fixed-point residual of LRFD, normalized like
/// [`cono_fixed_point_residual`] by `max(1, ‖λ P_Ω(X − AZ)‖_F)`.
pub fn lrfd_fixed_point_residual(
    z: &DenseMatrix,
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    lambda: f64,
    a_norm_sq: f64,
) -> Result<f64> {
    let next = lrfd_step(z, x, a, omega, lambda, a_norm_sq)?;
    let r = project_omega(&x.try_sub(&a.matmul(z)?)?, omega)?;
    Ok(next.distance(z)? / (lambda * r.frobenius_norm()).max(1.0))
}
