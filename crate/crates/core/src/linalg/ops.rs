use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

use super::matrix::{dot, DenseMatrix};
use super::svd::{full_svd, thin_svd};
use crate::error::{Error, Result};

/// The three matrix norms used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Largest singular value.
    Operator,
    /// Square root of the sum of squared entries.
    Frobenius,
    /// Sum of singular values.
    Nuclear,
}

pub fn norm(m: &DenseMatrix, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Frobenius => Ok(m.frobenius_norm()),
        NormKind::Operator => Ok(thin_svd(m)?.sigma.first().copied().unwrap_or(0.0)),
        NormKind::Nuclear => Ok(thin_svd(m)?.sigma.iter().sum()),
    }
}

/// Moore–Penrose pseudo-inverse `V Σ⁻¹ Uᵀ`.
pub fn pinv(m: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = thin_svd(m)?;
    let mut v_scaled = svd.v.clone();
    for (k, &s) in svd.sigma.iter().enumerate() {
        v_scaled.col_mut(k).iter_mut().for_each(|x| *x /= s);
    }
    v_scaled.matmul_t(&svd.u)
}

/// Result of singular value thresholding together with the spectrum of the
/// output, which solvers need for objective evaluation.
#[derive(Clone, Debug)]
pub struct Shrunk {
    pub matrix: DenseMatrix,
    /// Nuclear norm of `matrix`.
    pub nuclear_norm: f64,
    /// Number of singular values that survived the threshold.
    pub rank: usize,
}

/// Singular value thresholding: `U · diag(max(σ − τ, 0)) · Vᵀ`, the proximal
/// map of `τ‖·‖_*`.
pub fn svt(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_with_spectrum(m, tau)?.matrix)
}

pub fn svt_with_spectrum(m: &DenseMatrix, tau: f64) -> Result<Shrunk> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {tau}")));
    }
    let svd = full_svd(m)?;
    let kept = svd.sigma.iter().take_while(|&&s| s > tau).count();
    let (rows, cols) = m.shape();
    if kept == 0 {
        return Ok(Shrunk {
            matrix: DenseMatrix::zeros(rows, cols),
            nuclear_norm: 0.0,
            rank: 0,
        });
    }
    let mut us = svd.u.leading_cols(kept);
    let mut nuclear_norm = 0.0;
    for k in 0..kept {
        let w = svd.sigma[k] - tau;
        nuclear_norm += w;
        us.col_mut(k).iter_mut().for_each(|x| *x *= w);
    }
    let matrix = us.matmul_t(&svd.v.leading_cols(kept))?;
    Ok(Shrunk {
        matrix,
        nuclear_norm,
        rank: kept,
    })
}

/// Scales every nonzero column to unit ℓ₂ norm and drops zero columns.
pub fn normalize_columns(m: &DenseMatrix) -> Result<DenseMatrix> {
    let keep: Vec<usize> = (0..m.cols()).filter(|&j| m.col(j).iter().any(|&x| x != 0.0)).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let mut out = m.select_cols(&keep);
    for j in 0..out.cols() {
        let c = out.col_mut(j);
        let n = dot(c, c).sqrt();
        c.iter_mut().for_each(|x| *x /= n);
    }
    Ok(out)
}

/// Orthonormal basis for the column space of a full-column-rank matrix via
/// Householder QR (the thin `Q` factor).
pub fn qr_orthonormal(m: &DenseMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = m.shape();
    if cols > rows {
        return Err(Error::DimensionMismatch(format!(
            "QR basis needs rows >= cols, got {rows}x{cols}"
        )));
    }
    let mut a = m.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let x = &a.col(k)[k..];
        let alpha = dot(x, x).sqrt();
        let mut v = x.to_vec();
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = dot(&v, &v).sqrt();
        if vnorm == 0.0 {
            return Err(Error::InvalidParameter("rank-deficient input to QR".into()));
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        for j in k..cols {
            let c = &mut a.col_mut(j)[k..];
            let t = 2.0 * dot(&v, c);
            c.iter_mut().zip(&v).for_each(|(y, &vi)| *y -= t * vi);
        }
        reflectors.push(v);
    }
    let mut q = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        q[(j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..cols {
            let c = &mut q.col_mut(j)[k..];
            let t = 2.0 * dot(v, c);
            c.iter_mut().zip(v).for_each(|(y, &vi)| *y -= t * vi);
        }
    }
    Ok(q)
}

/// Largest eigenvalue of a symmetric positive semidefinite linear operator
/// on `ℝ^dim`, by power iteration from a fixed pseudo-random start.
///
/// Stops once successive Rayleigh quotients differ by at most
/// `tol · max(λ, tiny)`. An operator that annihilates the start vector
/// yields 0.
pub fn power_iteration(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    let mut rng = Pcg64::seed_from_u64(0x5eed_0f_0be7a);
    let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n0 = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= n0);
    let mut y = vec![0.0; dim];
    let mut estimate = 0.0f64;
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        apply(&x, &mut y);
        let rayleigh = dot(&x, &y);
        let ny = dot(&y, &y).sqrt();
        if ny == 0.0 {
            return Ok(0.0);
        }
        change = (rayleigh - estimate).abs();
        estimate = rayleigh;
        for (xi, &yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        if change <= tol * estimate.abs().max(1e-300) {
            return Ok(estimate);
        }
    }
    Err(Error::PowerIterationNoConvergence {
        iterations: max_iters,
        change,
    })
}

/// Symmetric tridiagonal matrix with diagonal `alpha` and off-diagonal `beta`.
fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DenseMatrix {
    let k = alpha.len();
    DenseMatrix::from_fn(k, k, |i, j| match i.abs_diff(j) {
        0 => alpha[i],
        1 => beta[i.min(j)],
        _ => 0.0,
    })
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// Lanczos iteration (a Krylov-accelerated power method) with full
/// reorthogonalization, started from the same vector as
/// [`power_iteration`].
///
/// Stops once the Ritz residual `β_k |s_k|` falls to `tol · θ`, which also
/// bounds the distance from the Ritz value `θ` to the spectrum. Clustered
/// top eigenvalues, which stall the plain power method, do not slow this
/// down. At most `min(max_iters, dim)` operator applications.
pub fn lanczos_max_eigenvalue(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    let mut rng = Pcg64::seed_from_u64(0x5eed_0f_0be7a);
    let mut q: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n0 = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= n0);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    let steps = max_iters.min(dim);
    for k in 0..steps {
        apply(&basis[k], &mut w);
        let a = dot(&basis[k], &w);
        alpha.push(a);
        // Two Gram-Schmidt passes against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let b = dot(&w, &w).sqrt();

        // T is PSD, so its singular values are its eigenvalues.
        let svd = full_svd(&tridiagonal(&alpha, &beta))?;
        let theta = svd.sigma[0];
        let last = svd.v[(k, 0)].abs();
        residual = b * last;
        if theta == 0.0 && b == 0.0 {
            return Ok(0.0);
        }
        if residual <= tol * theta.abs().max(1e-300) || b <= f64::EPSILON * theta.abs() {
            return Ok(theta);
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    if steps == dim {
        // The Krylov space is the whole space; the Ritz value is exact.
        return Ok(full_svd(&tridiagonal(&alpha, &beta[..alpha.len() - 1]))?.sigma[0]);
    }
    Err(Error::PowerIterationNoConvergence {
        iterations: steps,
        change: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_small_matrices() {
        assert!((norm(&DenseMatrix::identity(3), NormKind::Nuclear).unwrap() - 3.0).abs() < 1e-14);
        let d = DenseMatrix::diag(&[3.0, 4.0]);
        assert!((norm(&d, NormKind::Operator).unwrap() - 4.0).abs() < 1e-14);
        assert!((norm(&d, NormKind::Frobenius).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_diagonal_with_zero() {
        let p = pinv(&DenseMatrix::diag(&[2.0, 0.0])).unwrap();
        assert!(p.distance(&DenseMatrix::diag(&[0.5, 0.0])).unwrap() < 1e-15);
    }

    #[test]
    fn svt_diagonal() {
        let y = svt(&DenseMatrix::diag(&[3.0, 1.0]), 2.0).unwrap();
        assert!(y.distance(&DenseMatrix::diag(&[1.0, 0.0])).unwrap() < 1e-15);
        assert!(svt(&DenseMatrix::identity(2), -1.0).is_err());
    }

    #[test]
    fn svt_kills_everything_above_spectrum() {
        let s = svt_with_spectrum(&DenseMatrix::diag(&[3.0, 1.0]), 5.0).unwrap();
        assert_eq!(s.rank, 0);
        assert!(s.matrix.is_zero());
    }

    #[test]
    fn normalize_examples() {
        let m = DenseMatrix::from_row_major(2, 1, &[3.0, 4.0]).unwrap();
        let n = normalize_columns(&m).unwrap();
        assert!((n[(0, 0)] - 0.6).abs() < 1e-15 && (n[(1, 0)] - 0.8).abs() < 1e-15);

        let mut five = DenseMatrix::from_fn(3, 5, |i, j| (i + j + 1) as f64);
        five.col_mut(2).iter_mut().for_each(|x| *x = 0.0);
        assert_eq!(normalize_columns(&five).unwrap().cols(), 4);

        let again = normalize_columns(&n).unwrap();
        assert!(again.distance(&n).unwrap() < 1e-12);

        assert!(matches!(
            normalize_columns(&DenseMatrix::zeros(3, 2)),
            Err(Error::EmptyDictionary)
        ));
    }

    #[test]
    fn qr_basis_is_orthonormal_and_spans_input() {
        let m = DenseMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64).sin() + (j == i) as u8 as f64);
        let q = qr_orthonormal(&m).unwrap();
        assert!(q.t_matmul(&q).unwrap().distance(&DenseMatrix::identity(3)).unwrap() < 1e-13);
        let proj = q.matmul(&q.t_matmul(&m).unwrap()).unwrap();
        assert!(proj.distance(&m).unwrap() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_spectrum() {
        let mut rng = Pcg64::seed_from_u64(5);
        let g = DenseMatrix::from_fn(30, 12, |_, _| StandardNormal.sample(&mut rng));
        let gram = g.t_matmul(&g).unwrap();
        let top = thin_svd(&g).unwrap().sigma[0].powi(2);
        let got = lanczos_max_eigenvalue(12, |x, y| {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = (0..12).map(|j| gram[(i, j)] * x[j]).sum();
            }
        }, 100, 1e-12)
        .unwrap();
        assert!((got - top).abs() < 1e-9 * top);
        // Nearly tied top eigenvalues.
        let d: Vec<f64> = (0..400).map(|i| 1.0 - 1e-4 * i as f64).collect();
        let got = lanczos_max_eigenvalue(400, |x, y| y.iter_mut().zip(x).zip(&d).for_each(|((yi, &xi), di)| *yi = di * xi), 1000, 1e-8)
            .unwrap();
        assert!((got - 1.0).abs() < 1e-6);
        assert_eq!(lanczos_max_eigenvalue(3, |_, y| y.fill(0.0), 10, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_diagonal_operator() {
        let d = [0.2, 3.0, 1.0, 2.5];
        let top = power_iteration(4, |x, y| y.iter_mut().zip(x).zip(d).for_each(|((yi, &xi), di)| *yi = di * xi), 1000, 1e-12)
            .unwrap();
        assert!((top - 3.0).abs() < 1e-8);
        let zero = power_iteration(3, |_, y| y.iter_mut().for_each(|v| *v = 0.0), 10, 1e-8).unwrap();
        assert_eq!(zero, 0.0);
    }
}
