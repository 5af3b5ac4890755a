//! Planted test data: unions of random subspaces, the coherent rank-1 matrix,
//! `[𝟏, W]` dictionaries and observation noise.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{normalize_columns, qr_orthonormal, DenseMatrix};
use crate::observation::ObservationSet;
use crate::rng::{gaussian_matrix, mix_seed, rng_from_seed};

/// `k` random subspaces of dimension `r_s` in `R^m`, with `n_s` points drawn
/// from each, concatenated column-wise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubspaceMixSpec {
    pub rows: usize,
    pub cols: usize,
    pub num_subspaces: usize,
    pub dim_per_subspace: usize,
    pub points_per_subspace: usize,
    pub seed: u64,
}

impl SubspaceMixSpec {
    /// Splits `cols` evenly across `k` subspaces and `rank` across their
    /// dimensions.
    pub fn even(rows: usize, cols: usize, num_subspaces: usize, rank: usize, seed: u64) -> Result<Self> {
        if num_subspaces == 0 || cols % num_subspaces != 0 || rank % num_subspaces != 0 {
            return Err(Error::InvalidParameter(format!(
                "{num_subspaces} subspaces must divide cols {cols} and rank {rank}"
            )));
        }
        let spec = Self {
            rows,
            cols,
            num_subspaces,
            dim_per_subspace: rank / num_subspaces,
            points_per_subspace: cols / num_subspaces,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn rank(&self) -> usize {
        self.num_subspaces * self.dim_per_subspace
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_subspaces;
        if k == 0 || self.dim_per_subspace == 0 || self.points_per_subspace == 0 {
            return Err(Error::InvalidParameter("subspace counts and sizes must be positive".into()));
        }
        if k * self.points_per_subspace != self.cols {
            return Err(Error::InvalidParameter(format!(
                "{k} subspaces × {} points ≠ {} columns",
                self.points_per_subspace, self.cols
            )));
        }
        if self.rank() > self.rows.min(self.cols) {
            return Err(Error::InvalidParameter(format!(
                "total rank {} exceeds min({}, {})",
                self.rank(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }
}

/// `L₀ = [B₁C₁, …, B_kC_k]` with `Bᵢ` an orthonormalized `m×r_s` Gaussian draw
/// and `Cᵢ` an `r_s×n_s` Gaussian coefficient block.
pub fn gen_subspace_mixture(spec: &SubspaceMixSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mut out = DenseMatrix::zeros(spec.rows, spec.cols);
    for i in 0..spec.num_subspaces {
        let basis = qr_orthonormal(&gaussian_matrix(spec.rows, spec.dim_per_subspace, &mut rng))?;
        let coef = gaussian_matrix(spec.dim_per_subspace, spec.points_per_subspace, &mut rng);
        let block = basis.matmul(&coef)?;
        for j in 0..spec.points_per_subspace {
            out.col_mut(i * spec.points_per_subspace + j).copy_from_slice(block.col(j));
        }
    }
    Ok(out)
}

/// `n×n` matrix whose first column is all ones and everything else zero.
pub fn gen_coherent_rank1(n: usize) -> Result<DenseMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let mut m = DenseMatrix::zeros(n, n);
    m.col_mut(0).fill(1.0);
    Ok(m)
}

/// `[𝟏/√n, w₁, …, w_p]` with unit-norm Gaussian columns `wᵢ`.
pub fn gen_fig3_dictionary(n: usize, p: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut a = DenseMatrix::zeros(n, 1);
    a.col_mut(0).fill(1.0 / (n as f64).sqrt());
    if p == 0 {
        return Ok(a);
    }
    let w = normalize_columns(&gaussian_matrix(n, p, &mut rng_from_seed(seed)))?;
    a.hstack(&w)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the entrywise Gaussian noise.
    pub sigma: f64,
    pub seed: u64,
}

/// Adds `N(0, σ²)` to the entries in `Ω`; other entries are left untouched.
pub fn add_observation_noise(x: &DenseMatrix, omega: &ObservationSet, spec: &NoiseSpec) -> Result<DenseMatrix> {
    omega.check_shape(x)?;
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be non-negative, got {}", spec.sigma)));
    }
    let mut out = x.clone();
    if spec.sigma == 0.0 {
        return Ok(out);
    }
    let dist = Normal::new(0.0, spec.sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng_from_seed(mix_seed(spec.seed, &[0x6e6f697365]));
    for &(i, j) in omega.indices() {
        out[(i, j)] += dist.sample(&mut rng);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::coherence;
    use crate::linalg::{norm, thin_svd, NormKind};

    #[test]
    fn mixture_rank_and_shape() {
        for k in [1, 2, 4, 5] {
            let spec = SubspaceMixSpec::even(60, 40, k, 20, k as u64).unwrap();
            let l = gen_subspace_mixture(&spec).unwrap();
            assert_eq!(l.shape(), (60, 40));
            assert_eq!(thin_svd(&l).unwrap().rank(), 20);
        }
        assert!(SubspaceMixSpec::even(60, 40, 3, 20, 0).is_err());
        assert!(SubspaceMixSpec::even(10, 40, 2, 20, 0).is_err());
    }

    #[test]
    fn mixture_is_seeded() {
        let spec = SubspaceMixSpec::even(20, 20, 2, 4, 11).unwrap();
        let a = gen_subspace_mixture(&spec).unwrap();
        assert_eq!(a, gen_subspace_mixture(&spec).unwrap());
        let other = SubspaceMixSpec { seed: 12, ..spec };
        assert_ne!(a, gen_subspace_mixture(&other).unwrap());
    }

    #[test]
    fn coherent_rank1() {
        let m = gen_coherent_rank1(200).unwrap();
        let c = coherence(&m).unwrap();
        assert_eq!(c.rank_used, 1);
        assert!((c.mu1 - 1.0).abs() < 1e-10 && (c.mu2 - 200.0).abs() < 1e-9);
        assert!((norm(&m, NormKind::Nuclear).unwrap() - 200f64.sqrt()).abs() < 1e-10);
        assert!(gen_coherent_rank1(1).is_err());
    }

    #[test]
    fn fig3_dictionary_shape() {
        let a = gen_fig3_dictionary(200, 0, 1).unwrap();
        assert_eq!(a.shape(), (200, 1));
        let a = gen_fig3_dictionary(200, 19, 1).unwrap();
        assert_eq!(thin_svd(&a).unwrap().rank(), 20);
        for j in 0..20 {
            let n: f64 = a.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_only_on_omega() {
        let x = DenseMatrix::from_fn(30, 30, |i, j| (i * j) as f64);
        let omega = ObservationSet::sample_fraction(30, 30, 0.5, 4).unwrap();
        let same = add_observation_noise(&x, &omega, &NoiseSpec { sigma: 0.0, seed: 1 }).unwrap();
        assert_eq!(same, x);
        let noisy = add_observation_noise(&x, &omega, &NoiseSpec { sigma: 0.1, seed: 1 }).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                if !omega.contains(i, j) {
                    assert_eq!(noisy[(i, j)].to_bits(), x[(i, j)].to_bits());
                }
            }
        }
        // ‖noise‖ is 0.1·χ_{|Ω|}; its std is ≈ 0.1/√2.
        let e = noisy.distance(&x).unwrap();
        let mean = 0.1 * (omega.len() as f64).sqrt();
        assert!((e - mean).abs() < 3.0 * 0.1 / 2f64.sqrt(), "{e} vs {mean}");
    }
}
