//! Plain-text matrix format.
//!
//! ```text
//! rows,cols
//! a00,a01,...
//! a10,a11,...
//! ```
//!
//! Values are written in scientific notation with 17 significant digits, so
//! a write/read cycle reproduces every `f64` exactly.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

pub fn write_matrix<W: Write>(m: &DenseMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{},{}", m.rows(), m.cols())?;
    let mut line = String::new();
    for i in 0..m.rows() {
        line.clear();
        for j in 0..m.cols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", m[(i, j)]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<DenseMatrix> {
    let reader = BufReader::new(r);
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let (line_no, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing `rows,cols` header".into(),
    })?;
    let header = header?;
    let dims = parse_fields::<usize>(&header, line_no)?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse {
            line: line_no,
            message: format!("header must be `rows,cols`, got `{header}`"),
        });
    };
    if rows == 0 || cols == 0 {
        return Err(Error::Parse {
            line: line_no,
            message: "matrix dimensions must be positive".into(),
        });
    }

    let mut row_major = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line_no, line) in lines {
        let line = line?;
        let vals = parse_fields::<f64>(&line, line_no)?;
        if vals.len() != cols {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {cols} values, found {}", vals.len()),
            });
        }
        if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: seen, col: k });
        }
        seen += 1;
        if seen > rows {
            return Err(Error::Parse {
                line: line_no,
                message: format!("more than the declared {rows} rows"),
            });
        }
        row_major.extend(vals);
    }
    if seen != rows {
        return Err(Error::Parse {
            line: seen + 2,
            message: format!("expected {rows} rows, found {seen}"),
        });
    }
    DenseMatrix::from_row_major(rows, cols, &row_major)
}

pub(crate) fn parse_fields<T: std::str::FromStr>(line: &str, line_no: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    line.split(',')
        .map(|f| {
            f.trim().parse::<T>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("`{}`: {e}", f.trim()),
            })
        })
        .collect()
}

pub fn save_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let f = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_matrix(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_matrix(fs::File::open(path)?)
}
