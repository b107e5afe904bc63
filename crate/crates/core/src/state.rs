//! Gaussian states: covariance matrix `V` plus first moments.
//!
//! The vacuum has `V = 1`. A covariance matrix is physical iff `V + iΩ ⪰ 0`, and
//! the state is classical (a mixture of coherent states) iff `V ⪰ 1`. Means are
//! carried along but play no part in either test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{require_square_even, require_symmetric, symmetrize, to_complex, RMatrix};
use crate::rng;
use crate::symplectic::{check_psd, i_omega, random_symplectic, PsdReport, DEFAULT_TOL, HERMITIAN_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n: usize,
    mean: DVector<f64>,
    cov: RMatrix,
}

impl GaussianState {
    /// Validated state; rejects covariance matrices violating the uncertainty
    /// relation at `DEFAULT_TOL`.
    pub fn new(mean: DVector<f64>, cov: RMatrix) -> Result<Self> {
        let n = require_square_even(&cov, "covariance matrix")?;
        if mean.len() != 2 * n {
            return Err(Error::InvalidDimension(format!(
                "mean has length {}, expected {}",
                mean.len(),
                2 * n
            )));
        }
        let report = validate_state(&cov, DEFAULT_TOL)?;
        if !report.is_psd {
            return Err(Error::Domain(format!(
                "covariance matrix violates the uncertainty relation (margin {:.3e})",
                report.margin
            )));
        }
        Ok(Self { n, mean, cov: symmetrize(&cov) })
    }

    pub fn centered(cov: RMatrix) -> Result<Self> {
        let dim = cov.nrows();
        Self::new(DVector::zeros(dim), cov)
    }

    /// No validation beyond symmetric storage; for outputs of CP maps.
    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: RMatrix) -> Self {
        let n = cov.nrows() / 2;
        Self { n, mean, cov: symmetrize(&cov) }
    }

    pub fn vacuum(n: usize) -> Self {
        Self::from_parts_unchecked(DVector::zeros(2 * n), RMatrix::identity(2 * n, 2 * n))
    }

    /// Thermal state with mean photon number `nbar` in every mode.
    pub fn thermal(n: usize, nbar: f64) -> Result<Self> {
        Self::centered(RMatrix::identity(2 * n, 2 * n) * (2.0 * nbar + 1.0))
    }

    /// Single-mode squeezed vacuum `diag(e^{2r}, e^{-2r})`.
    pub fn squeezed(r: f64) -> Self {
        let cov = RMatrix::from_diagonal(&DVector::from_row_slice(&[(2.0 * r).exp(), (-2.0 * r).exp()]));
        Self::from_parts_unchecked(DVector::zeros(2), cov)
    }

    /// Single-mode coherent state `|α⟩`: `⟨x⟩ = √2 Re α`, `⟨p⟩ = √2 Im α`.
    pub fn coherent(alpha: Complex64) -> Self {
        let s2 = std::f64::consts::SQRT_2;
        Self::from_parts_unchecked(
            DVector::from_row_slice(&[s2 * alpha.re, s2 * alpha.im]),
            RMatrix::identity(2, 2),
        )
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &RMatrix {
        &self.cov
    }

    /// Mean total photon number `(tr V - 2n)/4 + |m|²/2`.
    pub fn mean_photon_number(&self) -> f64 {
        (self.cov.trace() - 2.0 * self.n as f64) / 4.0 + self.mean.norm_squared() / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalityVerdict {
    pub is_classical: bool,
    /// PSD margin of `V - 1`.
    pub margin: f64,
}

/// PSD report of `V + iΩ`.
pub fn validate_state(cov: &RMatrix, tol: f64) -> Result<PsdReport> {
    let n = require_square_even(cov, "covariance matrix")?;
    require_symmetric(cov, HERMITIAN_TOL, "covariance matrix")?;
    let h = to_complex(&symmetrize(cov)) + i_omega(n);
    check_psd(&h, tol)
}

pub fn is_classical_gaussian(cov: &RMatrix, tol: f64) -> Result<ClassicalityVerdict> {
    let validity = validate_state(cov, tol)?;
    if !validity.is_psd {
        return Err(Error::Domain(format!(
            "invalid covariance matrix (V + iΩ margin {:.3e})",
            validity.margin
        )));
    }
    let dim = cov.nrows();
    let shifted = symmetrize(cov) - RMatrix::identity(dim, dim);
    let report = check_psd(&to_complex(&shifted), tol)?;
    Ok(ClassicalityVerdict {
        is_classical: report.is_psd,
        margin: report.margin,
    })
}

/// `χ_s(ξ) = exp[-i√2 ξ^T m - ξ^T (V - s·1) ξ / 2]`.
///
/// The phase follows from `D(ξ) = exp[-i√2 ξ^T R]` with `m = ⟨R⟩`.
pub fn gaussian_char_fn(state: &GaussianState, xi: &[f64], s: f64) -> Result<Complex64> {
    if !(s.abs() <= 1.0) {
        return Err(Error::Domain(format!("order parameter s must lie in [-1, 1], got {s}")));
    }
    if xi.len() != 2 * state.n {
        return Err(Error::InvalidDimension(format!(
            "ξ has length {}, expected {}",
            xi.len(),
            2 * state.n
        )));
    }
    let xi = DVector::from_row_slice(xi);
    let quad = xi.dot(&(&state.cov * &xi)) - s * xi.norm_squared();
    let phase = -std::f64::consts::SQRT_2 * xi.dot(&state.mean);
    Ok(Complex64::from_polar((-0.5 * quad).exp(), phase))
}

/// `V = S^T diag(ν) S`, `S` from [`random_symplectic`], `ν_i` uniform in
/// `[1, thermal_max]`; zero mean.
pub fn random_gaussian_state(n: usize, max_squeeze: f64, thermal_max: f64, seed: u64) -> Result<GaussianState> {
    if !(thermal_max >= 1.0) || !thermal_max.is_finite() {
        return Err(Error::ContractViolation(format!(
            "thermal_max must be a finite value ≥ 1, got {thermal_max}"
        )));
    }
    let s = random_symplectic(n, max_squeeze, seed)?;
    let mut r = rng::stream(seed, 2);
    let diag: Vec<f64> = (0..n)
        .flat_map(|_| {
            let u: f64 = r.random();
            let nu = 1.0 + u * (thermal_max - 1.0);
            [nu, nu]
        })
        .collect();
    let cov = s.transpose() * DMatrix::from_diagonal(&DVector::from_vec(diag)) * &s;
    Ok(GaussianState::from_parts_unchecked(DVector::zeros(2 * n), cov))
}
