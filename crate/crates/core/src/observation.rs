//! Observation index sets and the projectors `P_Ω`, `P_Ω⊥` and `P_U`.
//!
//! Mask file format (0-based indices, sorted row-major):
//!
//! ```text
//! rows,cols,count
//! i,j
//! ...
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::RngExt;

use crate::error::{Error, Result};
use crate::linalg::io::parse_fields;
use crate::linalg::{thin_svd, DenseMatrix};
use crate::rng::rng_from_seed;

/// How an observation set was produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingModel {
    /// Every entry observed independently with probability `rho`.
    Bernoulli { rho: f64 },
    /// Exactly `count` entries chosen uniformly without replacement.
    UniformExactCount { count: usize },
    /// Supplied by the caller (e.g. read from a mask file).
    Explicit,
}

/// Set `Ω` of observed positions of a `rows × cols` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    rows: usize,
    cols: usize,
    /// Sorted row-major, no duplicates.
    indices: Vec<(usize, usize)>,
    /// Column-major membership flags, parallel to `DenseMatrix` storage.
    mask: Vec<bool>,
    model: SamplingModel,
    seed: u64,
}

impl ObservationSet {
    /// Draws an observation set; identical arguments give identical sets.
    pub fn sample(rows: usize, cols: usize, model: SamplingModel, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("observation grid must be non-empty".into()));
        }
        let total = rows * cols;
        let mut rng = rng_from_seed(seed);
        let linear: Vec<usize> = match model {
            SamplingModel::Bernoulli { rho } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::InvalidParameter(format!("rho must lie in (0, 1], got {rho}")));
                }
                (0..total).filter(|_| rng.random::<f64>() < rho).collect()
            }
            SamplingModel::UniformExactCount { count } => {
                if count == 0 || count > total {
                    return Err(Error::InvalidParameter(format!(
                        "count must lie in 1..={total}, got {count}"
                    )));
                }
                let mut v = index::sample(&mut rng, total, count).into_vec();
                v.sort_unstable();
                v
            }
            SamplingModel::Explicit => {
                return Err(Error::InvalidParameter(
                    "explicit observation sets are built with from_indices".into(),
                ))
            }
        };
        let indices = linear.into_iter().map(|k| (k / cols, k % cols)).collect();
        Ok(Self::build(rows, cols, indices, model, seed))
    }

    /// Observation set `Ω` with exactly `round(fraction · rows · cols)` entries.
    pub fn sample_fraction(rows: usize, cols: usize, fraction: f64, seed: u64) -> Result<Self> {
        let count = (fraction * (rows * cols) as f64).round() as usize;
        Self::sample(rows, cols, SamplingModel::UniformExactCount { count }, seed)
    }

    /// Builds an explicit set; indices may be unsorted but must be unique
    /// and in range.
    pub fn from_indices(rows: usize, cols: usize, mut indices: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(i, j)) = indices.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            return Err(Error::InvalidParameter(format!(
                "index ({i}, {j}) outside a {rows}x{cols} grid"
            )));
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate index {:?}", w[0])));
        }
        Ok(Self::build(rows, cols, indices, SamplingModel::Explicit, 0))
    }

    /// Every entry observed.
    pub fn full(rows: usize, cols: usize) -> Self {
        let indices = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
        Self::build(rows, cols, indices, SamplingModel::Explicit, 0)
    }

    /// Nothing observed.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::build(rows, cols, Vec::new(), SamplingModel::Explicit, 0)
    }

    fn build(rows: usize, cols: usize, indices: Vec<(usize, usize)>, model: SamplingModel, seed: u64) -> Self {
        let mut mask = vec![false; rows * cols];
        for &(i, j) in &indices {
            mask[j * rows + i] = true;
        }
        Self {
            rows,
            cols,
            indices,
            mask,
            model,
            seed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `|Ω| / (rows · cols)`.
    pub fn fraction(&self) -> f64 {
        self.len() as f64 / (self.rows * self.cols) as f64
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    /// Column-major membership flags.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && self.mask[j * self.rows + i]
    }

    pub fn model(&self) -> SamplingModel {
        self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn check_shape(&self, m: &DenseMatrix) -> Result<()> {
        if m.shape() != self.shape() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, observation set is {}x{}",
                m.rows(),
                m.cols(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},{},{}", self.rows, self.cols, self.len())?;
        for &(i, j) in &self.indices {
            writeln!(w, "{i},{j}")?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r)
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `rows,cols,count` header".into(),
        })?;
        let header = header?;
        let [rows, cols, count] = parse_fields::<usize>(&header, line_no)?[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("header must be `rows,cols,count`, got `{header}`"),
            });
        };
        if rows == 0 || cols == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "mask dimensions must be positive".into(),
            });
        }
        let mut indices = Vec::with_capacity(count);
        for (line_no, line) in lines {
            let line = line?;
            let [i, j] = parse_fields::<usize>(&line, line_no)?[..] else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `i,j`, got `{line}`"),
                });
            };
            indices.push((i, j));
        }
        if indices.len() != count {
            return Err(Error::Parse {
                line: line_no,
                message: format!("header declares {count} indices, file has {}", indices.len()),
            });
        }
        Self::from_indices(rows, cols, indices)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(fs::File::open(path)?)
    }
}

/// `P_Ω(m)`: keeps observed entries, zeroes the rest.
pub fn project_omega(m: &DenseMatrix, omega: &ObservationSet) -> Result<DenseMatrix> {
    omega.check_shape(m)?;
    let mut out = m.clone();
    for (v, &keep) in out.as_mut_slice().iter_mut().zip(omega.mask()) {
        if !keep {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// `P_Ω⊥(m)`: keeps unobserved entries, zeroes the observed ones.
pub fn project_omega_complement(m: &DenseMatrix, omega: &ObservationSet) -> Result<DenseMatrix> {
    omega.check_shape(m)?;
    let mut out = m.clone();
    for (v, &keep) in out.as_mut_slice().iter_mut().zip(omega.mask()) {
        if keep {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Orthonormal basis `U` (`m × r`) of a column space.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    basis: DenseMatrix,
}

impl SubspaceBasis {
    /// Wraps a matrix whose columns are already orthonormal (checked to 1e-10).
    pub fn new(basis: DenseMatrix) -> Result<Self> {
        let gram = basis.t_matmul(&basis)?;
        let err = gram.distance(&DenseMatrix::identity(basis.cols()))?;
        if err > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "basis columns are not orthonormal (‖UᵀU − I‖_F = {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis of the column space of `m` (left singular vectors).
    pub fn column_space_of(m: &DenseMatrix) -> Result<Self> {
        Ok(Self {
            basis: thin_svd(m)?.u,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }
}

/// `P_U(m) = U Uᵀ m`.
pub fn project_column_space(m: &DenseMatrix, u: &SubspaceBasis) -> Result<DenseMatrix> {
    if m.rows() != u.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, subspace lives in dimension {}",
            m.rows(),
            u.ambient_dim()
        )));
    }
    let coeffs = u.basis.t_matmul(m)?;
    u.basis.matmul(&coeffs)
}
