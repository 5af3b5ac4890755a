//! Two-stage completion: a nuclear-norm estimate supplies the dictionary for
//! a second, dictionary-constrained solve. Also home to numerical checks of
//! the recovery conditions.

use crate::coherence::coherence;
use crate::error::{Error, Result};
use crate::linalg::{dot, lanczos_max_eigenvalue, normalize_columns, thin_svd, DenseMatrix};
use crate::observation::{project_column_space, ObservationSet, SubspaceBasis};
use crate::rng::{gaussian_matrix, rng_from_seed};
use crate::solvers::{solve_cono, solve_lrfd, SolverConfig, SolverReport};

/// Relative threshold of the rank estimate.
pub const RANK_THRESHOLD: f64 = 1e-3;

/// Number of random probes used by [`lemma2_inverse_check`].
pub const NEUMANN_PROBES: usize = 10;

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 1000;

/// Number of values strictly above `1e-3` times the largest.
pub fn estimate_rank(singular_values: &[f64]) -> Result<usize> {
    let Some(&top) = singular_values.first() else {
        return Err(Error::InvalidParameter("no singular values".into()));
    };
    if !(top > 0.0) || singular_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("largest singular value must be positive and finite".into()));
    }
    if singular_values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("singular values must be non-increasing".into()));
    }
    Ok(singular_values.iter().filter(|&&s| s > RANK_THRESHOLD * top).count())
}

/// Best rank-`r` approximation.
pub fn truncate_to_rank(m: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    if r == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    Ok(thin_svd(m)?.truncated(r).reconstruct())
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    /// First-stage nuclear-norm estimate.
    pub cono_estimate: DenseMatrix,
    pub rank_estimate: usize,
    /// `cono_estimate` cut to `rank_estimate`.
    pub truncated: DenseMatrix,
    /// Nonzero columns of `truncated`, scaled to unit norm.
    pub dictionary: DenseMatrix,
    /// `dictionary · Z*`.
    pub final_estimate: DenseMatrix,
    pub cono_report: SolverReport,
    pub lrfd_report: SolverReport,
}

/// Runs both stages with the same `λ` and default solver settings.
pub fn run_algorithm1(x: &DenseMatrix, omega: &ObservationSet, lambda: f64) -> Result<PipelineResult> {
    run_algorithm1_with(x, omega, &SolverConfig::with_lambda(lambda))
}

pub fn run_algorithm1_with(x: &DenseMatrix, omega: &ObservationSet, cfg: &SolverConfig) -> Result<PipelineResult> {
    let cono = solve_cono(x, omega, cfg)?;
    finish_algorithm1(x, omega, cfg, cono)
}

/// Stages 2 to 5, given an already computed first-stage solve.
pub fn finish_algorithm1(
    x: &DenseMatrix,
    omega: &ObservationSet,
    cfg: &SolverConfig,
    cono: SolverReport,
) -> Result<PipelineResult> {
    if omega.is_empty() {
        return Err(Error::InvalidParameter("no observed entries".into()));
    }
    let svd = thin_svd(&cono.solution)?;
    if svd.rank() == 0 {
        return Err(Error::DegenerateEstimate);
    }
    let rank_estimate = estimate_rank(&svd.sigma)?;
    let truncated = svd.truncated(rank_estimate).reconstruct();
    let dictionary = match normalize_columns(&truncated) {
        Err(Error::EmptyDictionary) => return Err(Error::DegenerateEstimate),
        other => other?,
    };
    let lrfd = solve_lrfd(x, &dictionary, omega, cfg)?;
    Ok(PipelineResult {
        cono_estimate: cono.solution.clone(),
        rank_estimate,
        truncated,
        dictionary,
        final_estimate: lrfd.reconstruction.clone(),
        cono_report: cono,
        lrfd_report: lrfd,
    })
}

/// Quantities entering the exact-recovery condition for a dictionary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremDiagnostics {
    pub rank_l0: usize,
    pub rank_a: usize,
    pub mu1_a: f64,
    /// `‖P_{U_A}(U₀) − U₀‖_F`; zero when the column space of `L₀` lies in
    /// that of `A`.
    pub subspace_containment_residual: f64,
    /// `rank(A) · μ₁(A) · ln n₁ / n₂` with `n₁ = max(m, n)`, `n₂ = min(m, n)`.
    pub rank_ratio: f64,
    pub omega_fraction: f64,
}

pub fn check_theorem_conditions(l0: &DenseMatrix, a: &DenseMatrix, omega: &ObservationSet) -> Result<TheoremDiagnostics> {
    omega.check_shape(l0)?;
    if a.rows() != l0.rows() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows, L₀ has {}",
            a.rows(),
            l0.rows()
        )));
    }
    let u0 = thin_svd(l0)?.u;
    let ua = SubspaceBasis::column_space_of(a)?;
    if ua.dim() == 0 {
        return Err(Error::EmptyDictionary);
    }
    let residual = project_column_space(&u0, &ua)?.distance(&u0)?;
    let mu1_a = coherence(a)?.mu1;
    let (m, n) = l0.shape();
    let n1 = m.max(n) as f64;
    let n2 = m.min(n) as f64;
    Ok(TheoremDiagnostics {
        rank_l0: u0.cols(),
        rank_a: ua.dim(),
        mu1_a,
        subspace_containment_residual: residual,
        rank_ratio: ua.dim() as f64 * mu1_a * n1.ln() / n2,
        omega_fraction: omega.fraction(),
    })
}

/// `M ↦ P_U P_{Ω⊥} P_U (M)` on column-major `m × n` data.
struct Composition<'a> {
    u: &'a DenseMatrix,
    mask: &'a [bool],
    rows: usize,
    cols: usize,
    coef: Vec<f64>,
}

impl<'a> Composition<'a> {
    fn new(u: &'a SubspaceBasis, omega: &'a ObservationSet) -> Result<Self> {
        if u.ambient_dim() != omega.rows() {
            return Err(Error::DimensionMismatch(format!(
                "subspace lives in dimension {}, mask has {} rows",
                u.ambient_dim(),
                omega.rows()
            )));
        }
        Ok(Self {
            u: u.matrix(),
            mask: omega.mask(),
            rows: omega.rows(),
            cols: omega.cols(),
            coef: vec![0.0; u.dim()],
        })
    }

    fn project(&mut self, x: &[f64], y: &mut [f64]) {
        let (m, r) = (self.rows, self.u.cols());
        for j in 0..self.cols {
            let xj = &x[j * m..(j + 1) * m];
            for k in 0..r {
                self.coef[k] = dot(self.u.col(k), xj);
            }
            let yj = &mut y[j * m..(j + 1) * m];
            yj.fill(0.0);
            for k in 0..r {
                let c = self.coef[k];
                for (v, &b) in yj.iter_mut().zip(self.u.col(k)) {
                    *v += c * b;
                }
            }
        }
    }

    /// `y = P_U P_{Ω⊥} P_U x`, or with `P_Ω` when `observed` is set.
    fn apply(&mut self, x: &[f64], y: &mut [f64], observed: bool) {
        let mut tmp = vec![0.0; x.len()];
        self.project(x, &mut tmp);
        for (v, &keep) in tmp.iter_mut().zip(self.mask) {
            if keep != observed {
                *v = 0.0;
            }
        }
        self.project(&tmp, y);
    }
}

/// Operator norm of `P_U P_{Ω⊥} P_U` on `m × n` matrices, by Lanczos
/// iteration on the composed map (tolerance 1e-8, at most 1000 steps).
pub fn lemma1_operator_norm(u_a: &SubspaceBasis, omega: &ObservationSet) -> Result<f64> {
    let mut op = Composition::new(u_a, omega)?;
    if u_a.dim() == 0 {
        return Ok(0.0);
    }
    let dim = omega.rows() * omega.cols();
    lanczos_max_eigenvalue(dim, |x, y| op.apply(x, y, false), POWER_MAX_ITERS, POWER_TOL)
}

/// Largest relative error, over random probes `M = P_U(G)`, of the truncated
/// Neumann series `(I + Σᵢ₌₁ᵗ Qⁱ)` as an inverse of `P_U P_Ω P_U` on the range
/// of `P_U`, where `Q = P_U P_{Ω⊥} P_U` and `t = terms`.
pub fn lemma2_inverse_check(u_a: &SubspaceBasis, omega: &ObservationSet, terms: usize) -> Result<f64> {
    let psi = lemma1_operator_norm(u_a, omega)?;
    if psi >= 1.0 {
        return Err(Error::NeumannDiverges { psi });
    }
    let mut op = Composition::new(u_a, omega)?;
    let dim = omega.rows() * omega.cols();
    let mut rng = rng_from_seed(0x4e65_756d_616e_6e);
    let mut worst = 0.0f64;
    let mut term = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    for _ in 0..NEUMANN_PROBES {
        let g = gaussian_matrix(omega.rows(), omega.cols(), &mut rng);
        let mut probe = vec![0.0; dim];
        op.project(g.as_slice(), &mut probe);
        let norm = dot(&probe, &probe).sqrt();
        if norm == 0.0 {
            continue;
        }
        op.apply(&probe, &mut term, true);
        let mut acc = term.clone();
        for _ in 0..terms {
            op.apply(&term, &mut next, false);
            std::mem::swap(&mut term, &mut next);
            acc.iter_mut().zip(&term).for_each(|(a, &t)| *a += t);
        }
        let err: f64 = acc.iter().zip(&probe).map(|(a, p)| (a - p) * (a - p)).sum::<f64>().sqrt();
        worst = worst.max(err / norm);
    }
    Ok(worst)
}
