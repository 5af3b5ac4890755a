//! Self-contained dense linear algebra: matrices, thin SVD, singular value
//! thresholding, pseudo-inverse, norms and column normalization.

pub mod io;
mod matrix;
mod ops;
mod svd;

pub use matrix::DenseMatrix;
pub(crate) use matrix::dot;
pub use ops::{
    lanczos_max_eigenvalue, norm, normalize_columns, pinv, power_iteration, qr_orthonormal, svt, svt_with_spectrum, NormKind,
    Shrunk,
};
pub use svd::{rank_cutoff, thin_svd, ThinSvd};
