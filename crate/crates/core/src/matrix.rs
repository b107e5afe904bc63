//! Small dense-matrix helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;

use crate::error::{Error, Result};

pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

/// `max |a - b|` over entries.
pub fn max_abs_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn symmetrize(m: &RMatrix) -> RMatrix {
    (m + m.transpose()) * 0.5
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Asymmetry `max |m - m^T|` relative to `1 + max |m|`.
pub fn asymmetry(m: &RMatrix) -> f64 {
    max_abs_diff(m, &m.transpose()) / (1.0 + max_abs(m))
}

/// Non-Hermiticity `max |h - h^H|` relative to `1 + max |h|`.
pub fn non_hermiticity(h: &CMatrix) -> f64 {
    let d = h - h.adjoint();
    max_abs_c(&d) / (1.0 + max_abs_c(h))
}

/// `re + i·im` as a complex matrix.
pub fn complexify(re: &RMatrix, im: &RMatrix) -> CMatrix {
    CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
        Complex64::new(re[(i, j)], im[(i, j)])
    })
}

pub fn to_complex(re: &RMatrix) -> CMatrix {
    re.map(|v| Complex64::new(v, 0.0))
}

/// `i·m` for a real matrix `m`.
pub fn times_i(m: &RMatrix) -> CMatrix {
    m.map(|v| Complex64::new(0.0, v))
}

pub fn require_square_even(m: &RMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!(
            "{what} must have positive even dimension, got {}",
            m.nrows()
        )));
    }
    Ok(m.nrows() / 2)
}

pub fn require_symmetric(m: &RMatrix, tol: f64, what: &str) -> Result<()> {
    let asym = asymmetry(m);
    if asym > tol {
        return Err(Error::ContractViolation(format!(
            "{what} is not symmetric (relative asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<RMatrix> {
    if data.len() != rows * cols {
        return Err(Error::InvalidDimension(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(RMatrix::from_row_slice(rows, cols, data))
}

pub fn to_row_major(m: &RMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Serde adapter writing a real matrix as a flat row-major array.
pub mod row_major {
    use super::{to_row_major, RMatrix};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(m: &RMatrix, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(to_row_major(m))
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<RMatrix>, s: S) -> Result<S::Ok, S::Error> {
            match m {
                Some(m) => s.collect_seq(to_row_major(m)),
                None => s.serialize_none(),
            }
        }
    }
}
