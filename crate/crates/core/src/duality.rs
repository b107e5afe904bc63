//! Squeezing filters between entanglement-breaking and nonclassicality-breaking
//! channels.
//!
//! Given an EB split `Y = Y1 + Y2`, the Williamson matrix `S` of `Y1` brings
//! `S^T Y1 S` to `diag(ν) ⪰ 1`, and post-composing the channel with `S`
//! yields `(XS, S^T Y S)`, which is nonclassicality breaking.

use nalgebra::DMatrix;

use crate::channel::{is_nb, pre_post_unitary, GaussianChannel};
use crate::error::{Error, Result};
use crate::eb::{validate_certificate, EbCertificate};
use crate::state::{is_classical_gaussian, GaussianState};
use crate::symplectic::{
    euler_decompose, hermitian_eigenvalues, require_symplectic, williamson, EulerDecomposition,
};
use crate::matrix::{to_complex, RMatrix};

const DEGENERATE_EIGENVALUE: f64 = 1e-12;
const REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub s_filter: RMatrix,
    pub filtered: GaussianChannel,
    pub euler: EulerDecomposition,
    pub nb_margin: f64,
    /// Set when `Y1` had to be nudged to positive definite before Williamson.
    pub regularized: bool,
}

/// Build the post-processing filter from an EB certificate for `ch`.
///
/// The certificate's residuals are recomputed; an invalid one is rejected.
pub fn filter_to_nb(ch: &GaussianChannel, cert: &EbCertificate, tol: f64) -> Result<FilterResult> {
    let checked = validate_certificate(ch, cert, tol)?;
    if !checked.is_valid(tol) {
        return Err(Error::ContractViolation(format!(
            "certificate is not valid for this channel (cov margin {:.3e}, noise margin {:.3e}, sum residual {:.3e})",
            checked.residual_cov, checked.residual_noise, checked.residual_sum
        )));
    }
    let mut y1 = checked.y1.clone();
    let min_eig = hermitian_eigenvalues(&to_complex(&y1))?[0];
    if !min_eig.is_finite() || min_eig < -tol * (1.0 + y1.amax()) {
        return Err(Error::DegenerateCertificate(format!("Y1 has eigenvalue {min_eig:.3e}")));
    }
    let regularized = min_eig < DEGENERATE_EIGENVALUE;
    if regularized {
        let dim = y1.nrows();
        y1 += DMatrix::identity(dim, dim) * (REGULARIZATION + (-min_eig).max(0.0));
    }
    let w = williamson(&y1).map_err(|e| Error::DegenerateCertificate(e.to_string()))?;
    let filtered = pre_post_unitary(ch, None, Some(&w.s_matrix))?;
    let euler = euler_decompose(&w.s_matrix)?;
    let nb_margin = is_nb(&filtered, tol)?.margin;
    Ok(FilterResult { s_filter: w.s_matrix, filtered, euler, nb_margin, regularized })
}

/// The split `Y1 = 1`, `Y2 = Y - 1` of a nonclassicality-breaking channel.
pub fn nb_to_eb_certificate(ch: &GaussianChannel, tol: f64) -> Result<EbCertificate> {
    let nb = is_nb(ch, tol)?;
    if !nb.is_psd {
        return Err(Error::Domain(format!(
            "channel is not nonclassicality breaking (margin {:.3e})",
            nb.margin
        )));
    }
    let dim = 2 * ch.modes();
    let id = DMatrix::identity(dim, dim);
    EbCertificate::new(ch, id.clone(), ch.y() - id, tol)
}

/// Whether `S^T V S ⪰ 1` for every state, with the smallest classicality margin.
pub fn verify_filterable(states: &[GaussianState], s: &RMatrix, tol: f64) -> Result<(bool, f64)> {
    let n = require_symplectic(s, 1e-8, "filter")?;
    let mut worst = f64::INFINITY;
    for (i, st) in states.iter().enumerate() {
        if st.modes() != n {
            return Err(Error::InvalidDimension(format!(
                "state {i} has {} modes, filter acts on {n}",
                st.modes()
            )));
        }
        let v = s.transpose() * st.cov() * s;
        let v = (&v + v.transpose()) * 0.5;
        worst = worst.min(is_classical_gaussian(&v, tol)?.margin);
    }
    Ok((worst >= -tol, worst))
}
