//! Coherence parameters and the relative recovery error.

use crate::error::{Error, Result};
use crate::linalg::{dot, thin_svd, DenseMatrix};

/// Column-space (`mu1`) and row-space (`mu2`) coherence of a matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceReport {
    /// `(rows / r) · maxᵢ ‖Uᵀeᵢ‖²`, in `[1, rows]`.
    pub mu1: f64,
    /// `(cols / r) · maxⱼ ‖Vᵀeⱼ‖²`, in `[1, cols]`.
    pub mu2: f64,
    /// Numerical rank used for both, from the thin SVD cutoff.
    pub rank_used: usize,
}

pub fn coherence(m: &DenseMatrix) -> Result<CoherenceReport> {
    let svd = thin_svd(m)?;
    let r = svd.rank();
    if r == 0 {
        return Err(Error::ZeroMatrix("coherence is undefined at rank 0"));
    }
    Ok(CoherenceReport {
        mu1: max_row_leverage(&svd.u) * m.rows() as f64 / r as f64,
        mu2: max_row_leverage(&svd.v) * m.cols() as f64 / r as f64,
        rank_used: r,
    })
}

/// `μ₁` of a matrix alone.
pub fn mu1(m: &DenseMatrix) -> Result<f64> {
    Ok(coherence(m)?.mu1)
}

/// Largest squared row norm of a matrix with orthonormal columns.
fn max_row_leverage(q: &DenseMatrix) -> f64 {
    let mut lev = vec![0.0; q.rows()];
    for j in 0..q.cols() {
        for (l, &x) in lev.iter_mut().zip(q.col(j)) {
            *l += x * x;
        }
    }
    lev.into_iter().fold(0.0, f64::max)
}

/// `‖estimate − truth‖_F / ‖truth‖_F`.
pub fn recovery_error(estimate: &DenseMatrix, truth: &DenseMatrix) -> Result<f64> {
    let denom = dot(truth.as_slice(), truth.as_slice()).sqrt();
    if denom == 0.0 {
        return Err(Error::ZeroMatrix("recovery error needs a nonzero ground truth"));
    }
    Ok(estimate.distance(truth)? / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_incoherent() {
        let c = coherence(&DenseMatrix::identity(6)).unwrap();
        assert!((c.mu1 - 1.0).abs() < 1e-12 && (c.mu2 - 1.0).abs() < 1e-12);
        assert_eq!(c.rank_used, 6);
    }

    #[test]
    fn single_ones_column() {
        let mut m = DenseMatrix::zeros(200, 200);
        m.col_mut(0).iter_mut().for_each(|x| *x = 1.0);
        let c = coherence(&m).unwrap();
        assert!((c.mu1 - 1.0).abs() < 1e-10);
        assert!((c.mu2 - 200.0).abs() < 1e-10);
    }

    #[test]
    fn spike_is_maximally_coherent() {
        let mut m = DenseMatrix::zeros(7, 4);
        m[(0, 0)] = 1.0;
        let c = coherence(&m).unwrap();
        assert!((c.mu1 - 7.0).abs() < 1e-12 && (c.mu2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_rejected() {
        assert!(coherence(&DenseMatrix::zeros(3, 3)).is_err());
        assert!(recovery_error(&DenseMatrix::zeros(2, 2), &DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn recovery_error_examples() {
        let t = DenseMatrix::from_fn(3, 4, |i, j| (i as f64) - (j as f64) + 0.3);
        assert_eq!(recovery_error(&t, &t).unwrap(), 0.0);
        assert!((recovery_error(&DenseMatrix::zeros(3, 4), &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((recovery_error(&t.scale(1.1), &t).unwrap() - 0.1).abs() < 1e-12);
        assert!(recovery_error(&DenseMatrix::zeros(4, 3), &t).is_err());
    }
}
