//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use lrfd::rng::{gaussian_matrix, rng_from_seed};
use lrfd::DenseMatrix;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(rows, cols, &mut rng_from_seed(seed))
}

/// Random `rows × cols` matrix of the given rank, `B Cᵀ`.
pub fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> DenseMatrix {
    let b = gaussian(rows, rank, seed);
    let c = gaussian(cols, rank, seed ^ 0x5a5a);
    b.matmul_t(&c).unwrap()
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.distance(b).unwrap() / b.frobenius_norm().max(1.0)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in decreasing order and the eigenvectors as columns.
pub fn jacobi_eigen(s: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = s.rows();
    let mut a = s.clone();
    let mut v = DenseMatrix::identity(n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 * a.frobenius_norm().powi(2).max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    (vals, v.select_cols(&order))
}

/// Singular value thresholding from the eigen-decomposition of `MᵀM`.
pub fn svt_oracle(m: &DenseMatrix, tau: f64) -> DenseMatrix {
    let (vals, v) = jacobi_eigen(&m.t_matmul(m).unwrap());
    let mv = m.matmul(&v).unwrap();
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for (k, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        if s <= tau {
            continue;
        }
        let w = (s - tau) / s;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out[(i, j)] += w * mv[(i, k)] * v[(j, k)];
            }
        }
    }
    out
}

/// Singular values from the eigenvalues of `MᵀM`.
pub fn singular_values_oracle(m: &DenseMatrix) -> Vec<f64> {
    let g = if m.rows() >= m.cols() {
        m.t_matmul(m).unwrap()
    } else {
        m.matmul_t(m).unwrap()
    };
    jacobi_eigen(&g).0.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn inverse(s: &DenseMatrix) -> DenseMatrix {
    let n = s.rows();
    let mut a = s.clone();
    let mut inv = DenseMatrix::identity(n);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
        for k in 0..n {
            let (x, y) = (a[(c, k)], a[(p, k)]);
            a[(c, k)] = y;
            a[(p, k)] = x;
            let (x, y) = (inv[(c, k)], inv[(p, k)]);
            inv[(c, k)] = y;
            inv[(p, k)] = x;
        }
        let d = a[(c, c)];
        for k in 0..n {
            a[(c, k)] /= d;
            inv[(c, k)] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = a[(i, c)];
                for k in 0..n {
                    a[(i, k)] -= f * a[(c, k)];
                    inv[(i, k)] -= f * inv[(c, k)];
                }
            }
        }
    }
    inv
}

/// `(MᵀM)⁻¹Mᵀ` for full-column-rank `M`.
pub fn pinv_normal_equations(m: &DenseMatrix) -> DenseMatrix {
    inverse(&m.t_matmul(m).unwrap()).matmul_t(m).unwrap()
}

/// Nuclear norm from the oracle spectrum.
pub fn nuclear_oracle(m: &DenseMatrix) -> f64 {
    singular_values_oracle(m).iter().sum()
}

/// `τ‖Y‖_* + ½‖Y − M‖_F²`.
pub fn prox_objective(y: &DenseMatrix, m: &DenseMatrix, tau: f64) -> f64 {
    let d = y.distance(m).unwrap();
    tau * lrfd::linalg::norm(y, lrfd::NormKind::Nuclear).unwrap() + 0.5 * d * d
}
