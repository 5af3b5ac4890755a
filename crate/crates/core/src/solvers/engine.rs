use super::{SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::linalg::{dot, svt_with_spectrum, thin_svd, DenseMatrix};
use crate::observation::{project_omega, ObservationSet};

/// Factor by which `λ` grows between continuation stages.
const STAGE_GROWTH: f64 = 10.0;
/// Relative-change tolerance that ends a continuation stage before the
/// target `λ` (or `rel_tol` if that is looser).
const STAGE_TOL: f64 = 1e-5;

/// The quadratic `½‖P_Ω(X − B W)‖_F²` with `B` either the identity or a
/// tall matrix with orthogonal columns.
struct DataFit<'a> {
    observed: DenseMatrix,
    mask: &'a [bool],
    basis: Option<DenseMatrix>,
    lipschitz: f64,
}

impl DataFit<'_> {
    /// `P_Ω(X − B W)`.
    fn residual(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        let mut r = match &self.basis {
            Some(b) => b.matmul(w)?,
            None => w.clone(),
        };
        for ((v, &x), &keep) in r.as_mut_slice().iter_mut().zip(self.observed.as_slice()).zip(self.mask) {
            *v = if keep { x - *v } else { 0.0 };
        }
        Ok(r)
    }

    /// `Bᵀ r`.
    fn adjoint(&self, r: &DenseMatrix) -> Result<DenseMatrix> {
        match &self.basis {
            Some(b) => b.t_matmul(r),
            None => Ok(r.clone()),
        }
    }

    fn reconstruct(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match &self.basis {
            Some(b) => b.matmul(w),
            None => Ok(w.clone()),
        }
    }
}

struct Iterate {
    w: DenseMatrix,
    residual: DenseMatrix,
    /// `‖w‖_*`, unknown for the initial point.
    nuclear: Option<f64>,
}

impl Iterate {
    fn scaled_objective(&self, lambda: f64) -> f64 {
        self.nuclear.unwrap_or(f64::INFINITY) / lambda + 0.5 * sq(&self.residual)
    }
}

fn sq(m: &DenseMatrix) -> f64 {
    dot(m.as_slice(), m.as_slice())
}

fn prox_step(fit: &DataFit<'_>, point: &DenseMatrix, residual: &DenseMatrix, lambda: f64) -> Result<Iterate> {
    let mut g = point.clone();
    g.axpy_assign(1.0 / fit.lipschitz, &fit.adjoint(residual)?)?;
    let shrunk = svt_with_spectrum(&g, 1.0 / (lambda * fit.lipschitz))?;
    let residual = fit.residual(&shrunk.matrix)?;
    Ok(Iterate {
        w: shrunk.matrix,
        residual,
        nuclear: Some(shrunk.nuclear_norm),
    })
}

fn lincomb(a: &DenseMatrix, b: &DenseMatrix, beta: f64) -> DenseMatrix {
    // a + beta (a - b)
    let mut out = a.scale(1.0 + beta);
    out.axpy_assign(-beta, b).expect("iterates share a shape");
    out
}

struct Outcome {
    iterate: Iterate,
    trace: Vec<f64>,
    iterations: usize,
    change: f64,
    converged: bool,
}

fn run(fit: &DataFit<'_>, init: DenseMatrix, cfg: &SolverConfig) -> Result<Outcome> {
    cfg.validate()?;
    let target = cfg.lambda;
    let stage_tol = STAGE_TOL.max(cfg.rel_tol);
    let mut lambda = target;
    if cfg.continuation {
        // Zero is optimal for every λ ≤ 1/‖Bᵀ P_Ω X‖; the first stage sits a
        // factor STAGE_GROWTH above that.
        let g = fit.adjoint(&fit.observed)?;
        let top = thin_svd(&g)?.sigma.first().copied().unwrap_or(0.0);
        if top > 0.0 {
            lambda = (STAGE_GROWTH / top).min(target);
        }
    }

    let residual = fit.residual(&init)?;
    let mut cur = Iterate {
        w: init,
        residual,
        nuclear: None,
    };
    let mut prev: Option<Iterate> = None;
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    let mut change = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = match &prev {
            Some(_) if cfg.acceleration => (t - 1.0) / t_next,
            _ => 0.0,
        };

        let mut cand = match (&prev, beta > 0.0) {
            (Some(p), true) => {
                let y = lincomb(&cur.w, &p.w, beta);
                let ry = lincomb(&cur.residual, &p.residual, beta);
                prox_step(fit, &y, &ry, lambda)?
            }
            _ => prox_step(fit, &cur.w, &cur.residual, lambda)?,
        };
        let mut f_cand = cand.scaled_objective(lambda);
        t = t_next;
        if beta > 0.0 && f_cand > cur.scaled_objective(lambda) {
            // Momentum overshot: restart from a plain step, which cannot
            // increase the objective.
            cand = prox_step(fit, &cur.w, &cur.residual, lambda)?;
            f_cand = cand.scaled_objective(lambda);
            t = 1.0;
        }

        change = cand.w.distance(&cur.w)? / cur.w.frobenius_norm().max(1.0);
        trace.push(f_cand);
        prev = Some(std::mem::replace(&mut cur, cand));

        if lambda == target {
            if change <= cfg.rel_tol {
                converged = true;
                break;
            }
        } else if change <= stage_tol {
            // Stage done: raise λ and drop the momentum history.
            lambda = (lambda * STAGE_GROWTH).min(target);
            prev = None;
            t = 1.0;
        }
    }

    Ok(Outcome {
        iterate: cur,
        trace,
        iterations,
        change,
        converged,
    })
}

fn finish(fit: &DataFit<'_>, out: Outcome, lambda: f64, solution: DenseMatrix) -> Result<SolverReport> {
    let reconstruction = fit.reconstruct(&out.iterate.w)?;
    let residual_norm = out.iterate.residual.frobenius_norm();
    let nuclear = out.iterate.nuclear.unwrap_or(0.0);
    Ok(SolverReport {
        solution,
        reconstruction,
        objective_trace: out.trace,
        iterations: out.iterations,
        terminal_relative_change: out.change,
        converged: out.converged,
        lambda,
        objective: nuclear + 0.5 * lambda * residual_norm * residual_norm,
        residual_norm,
    })
}

/// Solves `min_L ‖L‖_* + (λ/2)‖P_Ω(X − L)‖_F²` starting from `L⁰ = P_Ω(X)`.
///
/// Running out of iterations is not an error; the report carries
/// `converged = false`.
pub fn solve_cono(x: &DenseMatrix, omega: &ObservationSet, cfg: &SolverConfig) -> Result<SolverReport> {
    let observed = project_omega(x, omega)?;
    let fit = DataFit {
        observed: observed.clone(),
        mask: omega.mask(),
        basis: None,
        lipschitz: 1.0,
    };
    let out = run(&fit, observed, cfg)?;
    let solution = out.iterate.w.clone();
    finish(&fit, out, cfg.lambda, solution)
}

/// Solves `min_Z ‖Z‖_* + (λ/2)‖P_Ω(X − AZ)‖_F²` starting from `Z⁰ = 0`.
///
/// Every iterate lies in the row space of `A`, so the solver works with
/// `Z = V_A W` and `AZ = U_A Σ_A W` from the thin SVD of `A`, which shrinks
/// each thresholding SVD to `rank(A) × n`. The iterates are the same as
/// those of the unreduced map [`super::lrfd_step`].
pub fn solve_lrfd(
    x: &DenseMatrix,
    a: &DenseMatrix,
    omega: &ObservationSet,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    if a.rows() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows, data has {}",
            a.rows(),
            x.rows()
        )));
    }
    let observed = project_omega(x, omega)?;
    let svd = thin_svd(a)?;
    if svd.rank() == 0 {
        return Err(Error::EmptyDictionary);
    }
    let mut basis = svd.u.clone();
    for (k, &s) in svd.sigma.iter().enumerate() {
        basis.col_mut(k).iter_mut().for_each(|v| *v *= s);
    }
    let fit = DataFit {
        observed,
        mask: omega.mask(),
        basis: Some(basis),
        lipschitz: svd.sigma[0] * svd.sigma[0],
    };
    let out = run(&fit, DenseMatrix::zeros(svd.rank(), x.cols()), cfg)?;
    let solution = svd.v.matmul(&out.iterate.w)?;
    finish(&fit, out, cfg.lambda, solution)
}
