//! Bosonic Gaussian channels `(X, Y)` acting as `V ↦ X^T V X + Y`.
//!
//! Every predicate is a PSD test on a shift of the characteristic matrix
//! `𝒱(X, Y) = Y - i X^T Ω X`:
//!
//! | property | condition      |
//! |----------|----------------|
//! | CP       | `𝒱 + iΩ ⪰ 0`   |
//! | PPT      | `𝒱 - iΩ ⪰ 0`   |
//! | NB       | `𝒱 - 1 ⪰ 0`    |
//!
//! Only square `X` (equal input and output mode counts) is supported.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eb::{eb_check, EbCertificate, EbOptions, EbPath, EbStatus};
use crate::error::{Error, Result};
use crate::matrix::{
    complexify, require_square_even, require_symmetric, symmetrize, CMatrix, RMatrix,
};
use crate::rng;
use crate::state::{random_gaussian_state, GaussianState};
use crate::symplectic::{
    check_psd, check_psd_real, hermitian_eigenvalues, i_omega, omega, require_symplectic, PsdReport,
    DEFAULT_TOL, HERMITIAN_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    n: usize,
    x: RMatrix,
    y: RMatrix,
}

impl GaussianChannel {
    /// Checked constructor: `Y` symmetric PSD and the CP condition at `tol`.
    pub fn new(x: RMatrix, y: RMatrix, tol: f64) -> Result<Self> {
        let ch = Self::new_unchecked(x, y)?;
        let y_report = check_psd_real(&ch.y, tol)?;
        if !y_report.is_psd {
            return Err(Error::Domain(format!(
                "noise matrix Y is not positive semidefinite (margin {:.3e})",
                y_report.margin
            )));
        }
        let cp = is_cp(&ch, tol)?;
        if !cp.is_psd {
            return Err(Error::NotCompletelyPositive { margin: cp.margin });
        }
        Ok(ch)
    }

    /// Only dimensions and the symmetry of `Y` are checked.
    pub fn new_unchecked(x: RMatrix, y: RMatrix) -> Result<Self> {
        let n = require_square_even(&x, "X")?;
        let ny = require_square_even(&y, "Y")?;
        if n != ny {
            return Err(Error::InvalidDimension(format!(
                "X is {}x{} but Y is {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        require_symmetric(&y, HERMITIAN_TOL, "Y")?;
        let y = symmetrize(&y);
        Ok(Self { n, x, y })
    }

    pub fn identity(n: usize) -> Self {
        let id = RMatrix::identity(2 * n, 2 * n);
        Self { n, x: id, y: RMatrix::zeros(2 * n, 2 * n) }
    }

    /// `X = κ·1`, `Y = y·1`.
    pub fn isotropic(n: usize, kappa: f64, y: f64) -> Self {
        let id = RMatrix::identity(2 * n, 2 * n);
        Self { n, x: &id * kappa, y: &id * y }
    }

    /// `X = κ·⊕diag(1, -1)`, `Y = y·1`.
    pub fn phase_conjugating(n: usize, kappa: f64, y: f64) -> Self {
        let d: Vec<f64> = (0..n).flat_map(|_| [kappa, -kappa]).collect();
        Self {
            n,
            x: DMatrix::from_diagonal(&DVector::from_vec(d)),
            y: RMatrix::identity(2 * n, 2 * n) * y,
        }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &RMatrix {
        &self.x
    }

    pub fn y(&self) -> &RMatrix {
        &self.y
    }

    /// `X^T Ω X`.
    pub fn twisted_form(&self) -> RMatrix {
        let k = self.x.transpose() * omega(self.n) * &self.x;
        (&k - k.transpose()) * 0.5
    }

    /// The same `X` with noise `Y + t·1`.
    pub fn with_added_noise(&self, t: f64) -> Self {
        let dim = 2 * self.n;
        Self {
            n: self.n,
            x: self.x.clone(),
            y: &self.y + RMatrix::identity(dim, dim) * t,
        }
    }
}

/// `𝒱 = Y - i X^T Ω X`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicMatrix {
    v: CMatrix,
}

impl CharacteristicMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.v
    }

    fn modes(&self) -> usize {
        self.v.nrows() / 2
    }

    /// `𝒱 + iΩ`.
    pub fn cp_form(&self) -> CMatrix {
        &self.v + i_omega(self.modes())
    }

    /// `𝒱 - iΩ`.
    pub fn ppt_form(&self) -> CMatrix {
        &self.v - i_omega(self.modes())
    }

    /// `𝒱 - 1`.
    pub fn nb_form(&self) -> CMatrix {
        let dim = self.v.nrows();
        &self.v - CMatrix::identity(dim, dim)
    }
}

pub fn characteristic_matrix(ch: &GaussianChannel) -> CharacteristicMatrix {
    CharacteristicMatrix {
        v: complexify(&ch.y, &(-ch.twisted_form())),
    }
}

pub fn is_cp(ch: &GaussianChannel, tol: f64) -> Result<PsdReport> {
    check_psd(&characteristic_matrix(ch).cp_form(), tol)
}

fn require_cp(ch: &GaussianChannel, tol: f64) -> Result<()> {
    let cp = is_cp(ch, tol)?;
    if !cp.is_psd {
        return Err(Error::NotCompletelyPositive { margin: cp.margin });
    }
    Ok(())
}

/// PPT test; the channel must be CP.
pub fn is_ppt(ch: &GaussianChannel, tol: f64) -> Result<PsdReport> {
    require_cp(ch, tol)?;
    check_psd(&characteristic_matrix(ch).ppt_form(), tol)
}

/// Nonclassicality-breaking test `Y - 1 ⪰ i X^T Ω X`; the channel must be CP.
pub fn is_nb(ch: &GaussianChannel, tol: f64) -> Result<PsdReport> {
    require_cp(ch, tol)?;
    check_psd(&characteristic_matrix(ch).nb_form(), tol)
}

/// Least `t ≥ 0` such that `(X, Y + t·1)` is nonclassicality breaking:
/// `max(0, λ_max(1 + i X^T Ω X - Y))`.
pub fn nb_threshold(ch: &GaussianChannel, tol: f64) -> Result<f64> {
    require_cp(ch, tol)?;
    let deficit = -characteristic_matrix(ch).nb_form();
    let ev = hermitian_eigenvalues(&deficit)?;
    Ok(ev[ev.len() - 1].max(0.0))
}

pub fn apply_to_state(ch: &GaussianChannel, state: &GaussianState) -> Result<GaussianState> {
    if state.modes() != ch.n {
        return Err(Error::InvalidDimension(format!(
            "channel acts on {} modes, state has {}",
            ch.n,
            state.modes()
        )));
    }
    let cov = ch.x.transpose() * state.cov() * &ch.x + &ch.y;
    let mean = ch.x.transpose() * state.mean();
    Ok(GaussianState::from_parts_unchecked(mean, cov))
}

/// `first` followed by `second`: `X = X1 X2`, `Y = X2^T Y1 X2 + Y2`.
pub fn compose(first: &GaussianChannel, second: &GaussianChannel) -> Result<GaussianChannel> {
    if first.n != second.n {
        return Err(Error::InvalidDimension(format!(
            "cannot compose channels on {} and {} modes",
            first.n, second.n
        )));
    }
    Ok(GaussianChannel {
        n: first.n,
        x: &first.x * &second.x,
        y: symmetrize(&(second.x.transpose() * &first.y * &second.x + &second.y)),
    })
}

/// Gaussian unitary `s1` before and `s2` after the channel:
/// `(X, Y) ↦ (S1 X S2, S2^T Y S2)`.
pub fn pre_post_unitary(
    ch: &GaussianChannel,
    s1: Option<&RMatrix>,
    s2: Option<&RMatrix>,
) -> Result<GaussianChannel> {
    let mut x = ch.x.clone();
    let mut y = ch.y.clone();
    if let Some(s1) = s1 {
        check_same_modes(require_symplectic(s1, 1e-8, "pre-processing matrix")?, ch.n)?;
        x = s1 * x;
    }
    if let Some(s2) = s2 {
        check_same_modes(require_symplectic(s2, 1e-8, "post-processing matrix")?, ch.n)?;
        x *= s2;
        y = symmetrize(&(s2.transpose() * y * s2));
    }
    Ok(GaussianChannel { n: ch.n, x, y })
}

fn check_same_modes(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidDimension(format!("expected {b} modes, got {a}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassificationFlags {
    pub cp: bool,
    pub ppt: bool,
    pub eb: bool,
    pub nb: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub modes: usize,
    pub tol: f64,
    pub cp_margin: f64,
    pub ppt_margin: f64,
    pub nb_margin: f64,
    pub nb_threshold: f64,
    pub eb_status: EbStatus,
    pub eb_path: EbPath,
    pub eb_iterations: usize,
    pub eb_gap: f64,
    pub eb_certificate: Option<EbCertificate>,
    pub flags: ClassificationFlags,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub eb_max_iter: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, eb_max_iter: EbOptions::default().max_iter }
    }
}

/// Full CP / PPT / EB / NB classification. The EB test runs last since it is
/// the only one that may need iterations.
pub fn classify(ch: &GaussianChannel, opts: &ClassifyOptions) -> Result<ClassificationReport> {
    let tol = opts.tol;
    let cp = is_cp(ch, tol)?;
    if !cp.is_psd {
        return Err(Error::NotCompletelyPositive { margin: cp.margin });
    }
    let ppt = is_ppt(ch, tol)?;
    let nb = is_nb(ch, tol)?;
    let threshold = nb_threshold(ch, tol)?;
    let eb = eb_check(ch, &EbOptions::with_tol(tol, opts.eb_max_iter))?;

    // NB ⟹ PPT and NB ⟹ EB hold exactly; at the tolerance boundary the
    // separately normalized margins may disagree, so NB decides.
    let ppt_flag = ppt.is_psd || nb.is_psd;
    let eb_flag = eb.status == EbStatus::Feasible;
    Ok(ClassificationReport {
        modes: ch.n,
        tol,
        cp_margin: cp.margin,
        ppt_margin: ppt.margin,
        nb_margin: nb.margin,
        nb_threshold: threshold,
        eb_status: eb.status,
        eb_path: eb.path,
        eb_iterations: eb.iterations,
        eb_gap: eb.gap,
        eb_certificate: eb.certificate,
        flags: ClassificationFlags {
            cp: true,
            ppt: ppt_flag,
            eb: eb_flag,
            nb: nb.is_psd,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Cp,
    Eb,
    Nb,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Cp => "cp",
            ChannelKind::Eb => "eb",
            ChannelKind::Nb => "nb",
        })
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp" => Ok(ChannelKind::Cp),
            "eb" => Ok(ChannelKind::Eb),
            "nb" => Ok(ChannelKind::Nb),
            other => Err(Error::ContractViolation(format!("unknown channel kind '{other}'"))),
        }
    }
}

/// A generated channel with the decomposition it was built from, if any.
#[derive(Debug, Clone)]
pub struct GeneratedChannel {
    pub kind: ChannelKind,
    pub seed: u64,
    pub channel: GaussianChannel,
    pub certificate: Option<EbCertificate>,
}

/// Seeded random channel of the requested kind.
///
/// * `cp`: `Y = t_cp (1 + u)·1 + P` with `t_cp = λ_max(i(X^T Ω X - Ω))`.
/// * `eb`: `Y = Y1 + Y2`, `Y1` a random valid covariance matrix,
///   `Y2 = (1 + u) X^T X + u·P`.
/// * `nb`: as `eb` with `Y1 = 1`.
///
/// `u` is uniform in `(0, noise_scale]` and `P` is a random PSD matrix.
pub fn random_channel(kind: ChannelKind, n: usize, seed: u64, noise_scale: f64) -> Result<GeneratedChannel> {
    if n == 0 {
        return Err(Error::InvalidDimension("mode count must be at least 1".into()));
    }
    if !(noise_scale > 0.0) || !noise_scale.is_finite() {
        return Err(Error::ContractViolation(format!(
            "noise_scale must be positive, got {noise_scale}"
        )));
    }
    let dim = 2 * n;
    let mut rx = rng::stream(seed, 10);
    let gain: f64 = rx.random_range(0.3..1.5);
    let x = rng::normal_matrix(&mut rx, dim, dim) * (gain / (dim as f64).sqrt());

    let mut ry = rng::stream(seed, 11);
    let u: f64 = noise_scale * (1.0 - ry.random::<f64>());
    let p = rng::psd_matrix(&mut ry, dim, noise_scale);
    let id = RMatrix::identity(dim, dim);
    let k = {
        let k = x.transpose() * omega(n) * &x;
        (&k - k.transpose()) * 0.5
    };

    let (y, certificate) = match kind {
        ChannelKind::Cp => {
            let shifted = crate::matrix::times_i(&(&k - omega(n)));
            let t_cp = top_eigenvalue(&shifted)?.max(0.0);
            (&id * (t_cp * (1.0 + u)) + p, None)
        }
        ChannelKind::Eb | ChannelKind::Nb => {
            // X^T X - i X^T Ω X = X^T (1 - iΩ) X ⪰ 0, so Y2 ⪰ i X^T Ω X.
            let y2 = symmetrize(&(x.transpose() * &x * (1.0 + u) + p * u));
            let y1 = match kind {
                ChannelKind::Eb => random_gaussian_state(n, 2.5, 2.0, seed ^ 0x9e37_79b9_7f4a_7c15)?
                    .cov()
                    .clone(),
                _ => id.clone(),
            };
            (symmetrize(&(&y1 + &y2)), Some((y1, y2)))
        }
    };
    let channel = GaussianChannel { n, x, y };
    let certificate = match certificate {
        Some((y1, y2)) => Some(EbCertificate::new(&channel, y1, y2, DEFAULT_TOL)?),
        None => None,
    };
    Ok(GeneratedChannel { kind, seed, channel, certificate })
}

fn top_eigenvalue(h: &CMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(h)?;
    Ok(ev[ev.len() - 1])
}

/// Smallest eigenvalue of `𝒱 - 1 + t·1`, for threshold bisection in tests.
#[doc(hidden)]
pub fn nb_min_eigenvalue_with_noise(ch: &GaussianChannel, t: f64) -> Result<f64> {
    let dim = 2 * ch.n;
    let m = characteristic_matrix(ch).nb_form() + CMatrix::identity(dim, dim) * Complex64::new(t, 0.0);
    Ok(hermitian_eigenvalues(&m)?[0])
}
