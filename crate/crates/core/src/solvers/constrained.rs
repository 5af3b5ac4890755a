//! Residual-constrained programs
//! `min ‖W‖_* s.t. ‖P_Ω(X − BW)‖_F ≤ ε`, reached through the penalized form.
//!
//! `λ` starts at [`CONSTRAINED_LAMBDA_START`] and is multiplied by 10 until
//! the residual bound holds or `λ` passes [`CONSTRAINED_LAMBDA_MAX`]. The
//! first feasible solve is returned; if none is feasible, the solve at the
//! largest `λ` is returned and its `residual_norm` exceeds `ε`.
//!
//! The plain wrappers solve each stage with [`constrained_config`]: an
//! ill-conditioned dictionary slows the gradient steps enough that the
//! default tolerance stops well short of the residual bound.

use super::{solve_cono, solve_lrfd, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::observation::{project_omega, ObservationSet};

pub const CONSTRAINED_LAMBDA_START: f64 = 100.0;
pub const CONSTRAINED_LAMBDA_MAX: f64 = 1e9;
pub const CONSTRAINED_MAX_ITERS: usize = 50_000;
pub const CONSTRAINED_REL_TOL: f64 = 1e-10;

/// Solver settings of [`solve_cono_constrained`] and [`solve_lrfd_constrained`].
pub fn constrained_config() -> SolverConfig {
    SolverConfig {
        max_iters: CONSTRAINED_MAX_ITERS,
        rel_tol: CONSTRAINED_REL_TOL,
        ..SolverConfig::default()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
    }
    Ok(())
}

fn trivial(x: &DenseMatrix, omega: &ObservationSet, epsilon: f64) -> Result<bool> {
    Ok(project_omega(x, omega)?.frobenius_norm() <= epsilon)
}

fn zero_report(solution: DenseMatrix, reconstruction: DenseMatrix, x: &DenseMatrix, omega: &ObservationSet) -> Result<SolverReport> {
    let residual_norm = project_omega(x, omega)?.frobenius_norm();
    Ok(SolverReport {
        solution,
        reconstruction,
        objective_trace: Vec::new(),
        iterations: 0,
        terminal_relative_change: 0.0,
        converged: true,
        lambda: 0.0,
        objective: 0.0,
        residual_norm,
    })
}

fn schedule(epsilon: f64, base: &SolverConfig, mut solve: impl FnMut(&SolverConfig) -> Result<SolverReport>) -> Result<SolverReport> {
    let mut lambda = CONSTRAINED_LAMBDA_START;
    loop {
        let cfg = SolverConfig { lambda, ..base.clone() };
        let rep = solve(&cfg)?;
        let next = lambda * 10.0;
        if rep.residual_norm <= epsilon || next > CONSTRAINED_LAMBDA_MAX {
            return Ok(rep);
        }
        lambda = next;
    }
}

/// Completion with `‖P_Ω(X − L)‖_F ≤ ε`. Solver settings other than `λ`
/// come from [`constrained_config`].
pub fn solve_cono_constrained(x: &DenseMatrix, omega: &ObservationSet, epsilon: f64) -> Result<SolverReport> {
    solve_cono_constrained_with(x, omega, epsilon, &constrained_config())
}

pub fn solve_cono_constrained_with(
    x: &DenseMatrix,
    omega: &ObservationSet,
    epsilon: f64,
    base: &SolverConfig,
) -> Result<SolverReport> {
    check_epsilon(epsilon)?;
    if trivial(x, omega, epsilon)? {
        let z = DenseMatrix::zeros(x.rows(), x.cols());
        return zero_report(z.clone(), z, x, omega);
    }
    schedule(epsilon, base, |cfg| solve_cono(x, omega, cfg))
}

/// LRFD with `‖P_Ω(X − AZ)‖_F ≤ ε`.
pub fn solve_lrfd_constrained(
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    epsilon: f64,
) -> Result<SolverReport> {
    solve_lrfd_constrained_with(x, a, omega, epsilon, &constrained_config())
}

pub fn solve_lrfd_constrained_with(
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    epsilon: f64,
    base: &SolverConfig,
) -> Result<SolverReport> {
    check_epsilon(epsilon)?;
    if a.rows() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows, data has {}",
            a.rows(),
            x.rows()
        )));
    }
    if trivial(x, omega, epsilon)? {
        return zero_report(
            DenseMatrix::zeros(a.cols(), x.cols()),
            DenseMatrix::zeros(x.rows(), x.cols()),
            x,
            omega,
        );
    }
    schedule(epsilon, base, |cfg| solve_lrfd(x, a, omega, cfg))
}
