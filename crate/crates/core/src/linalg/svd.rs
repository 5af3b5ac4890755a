//! Thin singular value decomposition.
//!
//! Golub–Kahan–Reinsch: Householder reduction to upper bidiagonal form,
//! followed by implicit-shift QR sweeps on the bidiagonal. The working copy
//! is always tall (`m >= n`); wide inputs are decomposed through their
//! transpose.

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Thin SVD `M = U · diag(sigma) · Vᵀ` keeping only the numerically nonzero
/// singular triplets.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    /// `m × r`, orthonormal columns.
    pub u: DenseMatrix,
    /// `r` strictly positive values, non-increasing.
    pub sigma: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub v: DenseMatrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U · diag(sigma) · Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.sigma)
    }

    /// `U · diag(weights) · Vᵀ`; trailing zero weights are skipped.
    pub fn reconstruct_with(&self, weights: &[f64]) -> DenseMatrix {
        let keep = weights.iter().rposition(|&w| w != 0.0).map_or(0, |p| p + 1);
        let mut scaled = self.u.leading_cols(keep);
        for (k, &w) in weights[..keep].iter().enumerate() {
            scaled.col_mut(k).iter_mut().for_each(|x| *x *= w);
        }
        scaled
            .matmul_t(&self.v.leading_cols(keep))
            .expect("thin SVD factors are conformable")
    }

    /// Keeps the leading `r` triplets.
    pub fn truncated(&self, r: usize) -> ThinSvd {
        let r = r.min(self.rank());
        ThinSvd {
            u: self.u.leading_cols(r),
            sigma: self.sigma[..r].to_vec(),
            v: self.v.leading_cols(r),
        }
    }
}

/// All singular values (including zeros) with full thin factors, before the
/// rank cutoff is applied. `u` is `m × k`, `v` is `n × k`, `k = min(m, n)`.
pub(crate) struct FullSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Thin SVD with numerical rank `#{σᵢ > max(m, n) · ε · σ₁}`.
pub fn thin_svd(m: &DenseMatrix) -> Result<ThinSvd> {
    let full = full_svd(m)?;
    let cutoff = rank_cutoff(m.rows(), m.cols(), full.sigma.first().copied().unwrap_or(0.0));
    let r = full.sigma.iter().take_while(|&&s| s > cutoff).count();
    Ok(ThinSvd {
        u: full.u.leading_cols(r),
        sigma: full.sigma[..r].to_vec(),
        v: full.v.leading_cols(r),
    })
}

/// Threshold below which a singular value counts as zero.
pub fn rank_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

pub(crate) fn full_svd(m: &DenseMatrix) -> Result<FullSvd> {
    m.check_finite()?;
    if m.rows() >= m.cols() {
        tall_svd(m.clone())
    } else {
        let t = tall_svd(m.transpose())?;
        Ok(FullSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

/// Applies the plane rotation `[c s; -s c]` to columns `j < k` of a
/// column-major buffer with `rows` rows.
#[inline]
fn rotate_cols(data: &mut [f64], rows: usize, j: usize, k: usize, c: f64, s: f64) {
    debug_assert!(j < k);
    let (left, right) = data.split_at_mut(k * rows);
    let cj = &mut left[j * rows..(j + 1) * rows];
    let ck = &mut right[..rows];
    for (x, y) in cj.iter_mut().zip(ck.iter_mut()) {
        let t = c * *x + s * *y;
        *y = -s * *x + c * *y;
        *x = t;
    }
}

fn tall_svd(mut a: DenseMatrix) -> Result<FullSvd> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    if n == 0 {
        return Ok(FullSvd {
            u: DenseMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(0, 0),
        });
    }

    let mut s = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut work = vec![0.0; m];
    let mut u = DenseMatrix::zeros(m, n);
    let mut v = DenseMatrix::zeros(n, n);

    let nct = (m - 1).min(n);
    let nrt = n.saturating_sub(2).min(m);

    // Householder bidiagonalization. Column reflectors are stored in the
    // lower part of `a`, row reflectors in `e` and then in `v`.
    for k in 0..nct.max(nrt) {
        if k < nct {
            let col = &mut a.col_mut(k)[k..];
            let mut norm = dot(col, col).sqrt();
            if norm != 0.0 {
                if col[0] < 0.0 {
                    norm = -norm;
                }
                col.iter_mut().for_each(|x| *x /= norm);
                col[0] += 1.0;
            }
            s[k] = -norm;
        }
        for j in k + 1..n {
            if k < nct && s[k] != 0.0 {
                let data = a.as_mut_slice();
                let (head, tail) = data.split_at_mut(j * m);
                let hk = &head[k * m + k..(k + 1) * m];
                let cj = &mut tail[k..m];
                let t = -dot(hk, cj) / hk[0];
                for (y, &x) in cj.iter_mut().zip(hk) {
                    *y += t * x;
                }
            }
            e[j] = a[(k, j)];
        }
        if k < nct {
            u.col_mut(k)[k..].copy_from_slice(&a.col(k)[k..]);
        }
        if k < nrt {
            let tail = &mut e[k + 1..];
            let mut norm = dot(tail, tail).sqrt();
            if norm != 0.0 {
                if tail[0] < 0.0 {
                    norm = -norm;
                }
                tail.iter_mut().for_each(|x| *x /= norm);
                tail[0] += 1.0;
            }
            e[k] = -norm;
            if k + 1 < m && e[k] != 0.0 {
                work[k + 1..].iter_mut().for_each(|w| *w = 0.0);
                for j in k + 1..n {
                    let ej = e[j];
                    for (w, &x) in work[k + 1..].iter_mut().zip(&a.col(j)[k + 1..]) {
                        *w += ej * x;
                    }
                }
                for j in k + 1..n {
                    let t = -e[j] / e[k + 1];
                    for (y, &w) in a.col_mut(j)[k + 1..].iter_mut().zip(&work[k + 1..]) {
                        *y += t * w;
                    }
                }
            }
            v.col_mut(k)[k + 1..].copy_from_slice(&e[k + 1..]);
        }
    }

    let mut p = n;
    if nct < n {
        s[nct] = a[(nct, nct)];
    }
    if nrt + 1 < p {
        e[nrt] = a[(nrt, p - 1)];
    }
    e[p - 1] = 0.0;

    // Accumulate U from the column reflectors.
    for j in nct..n {
        u.col_mut(j).iter_mut().for_each(|x| *x = 0.0);
        u[(j, j)] = 1.0;
    }
    for k in (0..nct).rev() {
        if s[k] != 0.0 {
            for j in k + 1..n {
                let data = u.as_mut_slice();
                let (head, tail) = data.split_at_mut(j * m);
                let hk = &head[k * m + k..(k + 1) * m];
                let cj = &mut tail[k..m];
                let t = -dot(hk, cj) / hk[0];
                for (y, &x) in cj.iter_mut().zip(hk) {
                    *y += t * x;
                }
            }
            let ck = u.col_mut(k);
            ck[k..].iter_mut().for_each(|x| *x = -*x);
            ck[k] += 1.0;
            ck[..k].iter_mut().for_each(|x| *x = 0.0);
        } else {
            let ck = u.col_mut(k);
            ck.iter_mut().for_each(|x| *x = 0.0);
            ck[k] = 1.0;
        }
    }

    // Accumulate V from the row reflectors.
    for k in (0..n).rev() {
        if k < nrt && e[k] != 0.0 {
            for j in k + 1..n {
                let data = v.as_mut_slice();
                let (head, tail) = data.split_at_mut(j * n);
                let hk = &head[k * n + k + 1..(k + 1) * n];
                let cj = &mut tail[k + 1..n];
                let t = -dot(hk, cj) / hk[0];
                for (y, &x) in cj.iter_mut().zip(hk) {
                    *y += t * x;
                }
            }
        }
        let ck = v.col_mut(k);
        ck.iter_mut().for_each(|x| *x = 0.0);
        ck[k] = 1.0;
    }

    // Implicit-shift QR on the bidiagonal (s, e).
    let eps = f64::EPSILON;
    let tiny = 2.0f64.powi(-966);
    let max_steps = 100 * n;
    let mut steps = 0usize;
    while p > 0 {
        // Find the largest k < p-1 with a negligible e[k]; -1 if none.
        let mut k = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = 0.0;
                break;
            }
            k -= 1;
        }

        let kase;
        if k == p as isize - 2 {
            kase = 4;
        } else {
            let mut ks = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t = if ksu != p { e[ksu].abs() } else { 0.0 }
                    + if ks != k + 1 { e[ksu - 1].abs() } else { 0.0 };
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = 0.0;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kase = 3;
            } else if ks == p as isize - 1 {
                kase = 1;
            } else {
                kase = 2;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kase {
            // Deflate a negligible s[p-1].
            1 => {
                let mut f = e[p - 2];
                e[p - 2] = 0.0;
                for j in (k..=p - 2).rev() {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] *= cs;
                    }
                    rotate_cols(v.as_mut_slice(), n, j, p - 1, cs, sn);
                }
            }
            // Split at a negligible s[k-1].
            2 => {
                let mut f = e[k - 1];
                e[k - 1] = 0.0;
                for j in k..p {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] *= cs;
                    // Rotation acts on (j, k-1) with k-1 < j.
                    rotate_cols(u.as_mut_slice(), m, k - 1, j, cs, -sn);
                }
            }
            // One QR step with Wilkinson-style shift.
            3 => {
                steps += 1;
                if steps > max_steps {
                    let residual = e[..p.saturating_sub(1)]
                        .iter()
                        .fold(0.0f64, |acc, x| acc.max(x.abs()));
                    return Err(Error::SvdNoConvergence {
                        iterations: steps - 1,
                        residual,
                    });
                }
                let scale = s[p - 1]
                    .abs()
                    .max(s[p - 2].abs())
                    .max(e[p - 2].abs())
                    .max(s[k].abs())
                    .max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = 0.0;
                if b != 0.0 || c != 0.0 {
                    shift = (b * b + c).sqrt();
                    if b < 0.0 {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;

                for j in k..p - 1 {
                    let t = f.hypot(g);
                    let cs = f / t;
                    let sn = g / t;
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] *= cs;
                    rotate_cols(v.as_mut_slice(), n, j, j + 1, cs, sn);

                    let t = f.hypot(g);
                    let cs = f / t;
                    let sn = g / t;
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] *= cs;
                    if j < m - 1 {
                        rotate_cols(u.as_mut_slice(), m, j, j + 1, cs, sn);
                    }
                }
                e[p - 2] = f;
            }
            // Converged: fix the sign of s[k].
            _ => {
                if s[k] <= 0.0 {
                    s[k] = if s[k] < 0.0 { -s[k] } else { 0.0 };
                    v.col_mut(k).iter_mut().for_each(|x| *x = -*x);
                }
                p -= 1;
            }
        }
    }

    // Sort descending with one permutation instead of bubbling columns.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let sigma = order.iter().map(|&i| s[i]).collect();
    Ok(FullSvd {
        u: u.select_cols(&order),
        sigma,
        v: v.select_cols(&order),
    })
}
