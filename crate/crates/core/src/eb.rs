//! Entanglement-breaking test: does `Y` split as `Y1 + Y2` with
//! `Y1 + iΩ ⪰ 0` and `Y2 ⪰ i X^T Ω X`?
//!
//! Closed-form answers are tried first (PPT violation, single mode, `X = 0`,
//! nonclassicality breaking). The general case runs Dykstra's alternating
//! projections on the real embedding `A + iB ↦ [[A, -B], [B, A]]` of the two
//! Hermitian constraints, with `Y1` as the only free variable.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::channel::{characteristic_matrix, is_cp, is_nb, GaussianChannel};
use crate::error::{Error, Result};
use crate::matrix::{complexify, max_abs, max_abs_diff, symmetrize, times_i, RMatrix};
use crate::symplectic::{check_psd, hermitian_eigenvalues, omega, williamson, PsdReport};

/// `Y = Y1 + Y2` with residuals recomputed from the matrices themselves.
#[derive(Debug, Clone, Serialize)]
pub struct EbCertificate {
    #[serde(with = "crate::matrix::row_major")]
    pub y1: RMatrix,
    #[serde(with = "crate::matrix::row_major")]
    pub y2: RMatrix,
    /// PSD margin of `Y1 + iΩ`.
    pub residual_cov: f64,
    /// PSD margin of `Y2 - i X^T Ω X`.
    pub residual_noise: f64,
    /// `max |Y - Y1 - Y2|`.
    pub residual_sum: f64,
}

impl EbCertificate {
    pub fn new(ch: &GaussianChannel, y1: RMatrix, y2: RMatrix, tol: f64) -> Result<Self> {
        let dim = 2 * ch.modes();
        for (m, name) in [(&y1, "Y1"), (&y2, "Y2")] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidDimension(format!(
                    "{name} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let y1 = symmetrize(&y1);
        let y2 = symmetrize(&y2);
        let (cov, noise) = split_reports(ch, &y1, &y2, tol)?;
        let residual_sum = max_abs_diff(ch.y(), &(&y1 + &y2));
        Ok(Self {
            y1,
            y2,
            residual_cov: cov.margin,
            residual_noise: noise.margin,
            residual_sum,
        })
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.residual_cov >= -tol && self.residual_noise >= -tol && self.residual_sum <= tol
    }
}

fn split_reports(ch: &GaussianChannel, y1: &RMatrix, y2: &RMatrix, tol: f64) -> Result<(PsdReport, PsdReport)> {
    let n = ch.modes();
    let cov = check_psd(&complexify(y1, &omega(n)), tol)?;
    let noise = check_psd(&complexify(y2, &(-ch.twisted_form())), tol)?;
    Ok((cov, noise))
}

/// Recompute a certificate's residuals for `ch`, ignoring any stored values.
pub fn validate_certificate(ch: &GaussianChannel, cert: &EbCertificate, tol: f64) -> Result<EbCertificate> {
    EbCertificate::new(ch, cert.y1.clone(), cert.y2.clone(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EbStatus {
    Feasible,
    Infeasible,
    Undecided,
}

/// Which branch of [`eb_check`] produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EbPath {
    PptViolation,
    SingleMode,
    ZeroX,
    Nonclassicality,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfeasibilityWitness {
    /// EB implies PPT.
    PptViolation { margin: f64 },
    /// The inter-set gap stopped shrinking above the infeasibility floor.
    StalledGap { gap: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityResult {
    pub status: EbStatus,
    pub path: EbPath,
    pub certificate: Option<EbCertificate>,
    pub witness: Option<InfeasibilityWitness>,
    pub iterations: usize,
    pub gap: f64,
    /// Gap sampled every `stall_window` iterations.
    pub gap_trace: Vec<f64>,
}

impl FeasibilityResult {
    fn closed_form(status: EbStatus, path: EbPath, certificate: Option<EbCertificate>) -> Self {
        Self {
            status,
            path,
            certificate,
            witness: None,
            iterations: 0,
            gap: 0.0,
            gap_trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EbOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub infeasibility_floor: f64,
    pub stall_window: usize,
    pub stall_rel_change: f64,
}

impl Default for EbOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20_000,
            infeasibility_floor: 1e-7,
            stall_window: 100,
            stall_rel_change: 1e-12,
        }
    }
}

impl EbOptions {
    /// Options at tolerance `tol` with the floor at `10·tol`.
    pub fn with_tol(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            infeasibility_floor: 10.0 * tol,
            ..Self::default()
        }
    }
}

/// Decide whether `ch` is entanglement breaking.
pub fn eb_check(ch: &GaussianChannel, opts: &EbOptions) -> Result<FeasibilityResult> {
    let tol = opts.tol;
    let cp = is_cp(ch, tol)?;
    if !cp.is_psd {
        return Err(Error::NotCompletelyPositive { margin: cp.margin });
    }

    let ppt = check_psd(&characteristic_matrix(ch).ppt_form(), tol)?;
    if !ppt.is_psd {
        let mut r = FeasibilityResult::closed_form(EbStatus::Infeasible, EbPath::PptViolation, None);
        r.witness = Some(InfeasibilityWitness::PptViolation { margin: ppt.margin });
        return Ok(r);
    }

    if ch.modes() == 1 {
        if let Some(y1) = single_mode_split(ch) {
            let y2 = ch.y() - &y1;
            let cert = EbCertificate::new(ch, y1, y2, tol)?;
            if cert.is_valid(tol) {
                return Ok(FeasibilityResult::closed_form(
                    EbStatus::Feasible,
                    EbPath::SingleMode,
                    Some(cert),
                ));
            }
        }
    }

    if max_abs(ch.x()) == 0.0 {
        let dim = 2 * ch.modes();
        let cert = EbCertificate::new(ch, ch.y().clone(), RMatrix::zeros(dim, dim), tol)?;
        if cert.is_valid(tol) {
            return Ok(FeasibilityResult::closed_form(EbStatus::Feasible, EbPath::ZeroX, Some(cert)));
        }
    }

    if is_nb(ch, tol)?.is_psd {
        let dim = 2 * ch.modes();
        let id = RMatrix::identity(dim, dim);
        let cert = EbCertificate::new(ch, id.clone(), ch.y() - id, tol)?;
        if cert.is_valid(tol) {
            return Ok(FeasibilityResult::closed_form(
                EbStatus::Feasible,
                EbPath::Nonclassicality,
                Some(cert),
            ));
        }
    }

    let start = scaled_split(ch).unwrap_or_else(|| ch.y() * 0.5);
    run_projection(ch, &start, opts)
}

/// Single mode: with `D = det Y` and `δ = det X`, `Y1 = aY` works for any
/// `a ∈ [1/√D, 1 - |δ|/√D]`, an interval that is non-empty exactly when the
/// channel is PPT. The midpoint is returned.
fn single_mode_split(ch: &GaussianChannel) -> Option<RMatrix> {
    let det_y = ch.y().determinant();
    if !(det_y > 0.0) {
        return None;
    }
    let root = det_y.sqrt();
    let delta = ch.x().determinant();
    let lo = root.recip();
    let hi = 1.0 - delta.abs() / root;
    let a = if hi >= lo { 0.5 * (lo + hi) } else { lo };
    Some(ch.y() * a)
}

/// Best split along the ray `Y1 = tY`: feasible for
/// `t ∈ [1/ν_min(Y), 1 - λ_max(Y^{-1/2} i X^T Ω X Y^{-1/2})]`. Returns the
/// midpoint, or the nearer end when the interval is empty. `None` when `Y` is
/// singular.
fn scaled_split(ch: &GaussianChannel) -> Option<RMatrix> {
    let y = ch.y();
    let eig = SymmetricEigen::new(y.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-12)) {
        return None;
    }
    let nu_min = *williamson(y).ok()?.nu.last()?;
    let inv_sqrt = DVector::from_iterator(y.nrows(), eig.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let y_is = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let k = ch.twisted_form();
    let m = &y_is * k * &y_is;
    let m = (&m - m.transpose()) * 0.5;
    let ev = hermitian_eigenvalues(&times_i(&m)).ok()?;
    let mu = ev[ev.len() - 1].max(0.0);
    let lo = nu_min.recip();
    let hi = 1.0 - mu;
    let t = if hi >= lo { 0.5 * (lo + hi) } else { 0.5 * (lo + hi).clamp(0.0, 1.0) };
    Some(y * t)
}

/// Run the projection solver from `y1_init`, bypassing the closed-form paths.
pub fn eb_decompose_projection(ch: &GaussianChannel, y1_init: &RMatrix, opts: &EbOptions) -> Result<FeasibilityResult> {
    let cp = is_cp(ch, opts.tol)?;
    if !cp.is_psd {
        return Err(Error::NotCompletelyPositive { margin: cp.margin });
    }
    let dim = 2 * ch.modes();
    if y1_init.nrows() != dim || y1_init.ncols() != dim {
        return Err(Error::InvalidDimension(format!(
            "initial Y1 is {}x{}, expected {dim}x{dim}",
            y1_init.nrows(),
            y1_init.ncols()
        )));
    }
    crate::matrix::require_symmetric(y1_init, 1e-12, "initial Y1")?;
    run_projection(ch, &symmetrize(y1_init), opts)
}

/// `[[A, -B], [B, A]]`.
fn embed(a: &RMatrix, b: &RMatrix) -> RMatrix {
    let d = a.nrows();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(a);
    m.view_mut((d, d), (d, d)).copy_from(a);
    m.view_mut((0, d), (d, d)).copy_from(&(-b));
    m.view_mut((d, 0), (d, d)).copy_from(b);
    m
}

/// Symmetric part of the averaged diagonal blocks, i.e. the `A` in the
/// nearest embedded matrix.
fn real_part(z: &RMatrix) -> RMatrix {
    let d = z.nrows() / 2;
    let a = (z.view((0, 0), (d, d)) + z.view((d, d), (d, d))) * 0.5;
    symmetrize(&a)
}

/// Eigenvalues clipped from below at `floor`.
fn clip_psd(z: &RMatrix, floor: f64) -> RMatrix {
    let eig = SymmetricEigen::new(symmetrize(z));
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    symmetrize(&m)
}

struct Lifted<'a> {
    y: &'a RMatrix,
    skew_cov: RMatrix,
    skew_noise: RMatrix,
}

impl Lifted<'_> {
    fn point(&self, y1: &RMatrix) -> (RMatrix, RMatrix) {
        (embed(y1, &self.skew_cov), embed(&(self.y - y1), &self.skew_noise))
    }

    /// Projection onto `{(E(Y1, Ω), E(Y - Y1, -K))}`: minimizing the Frobenius
    /// distance in `Y1` gives `Y1 = (A1 + Y - A2)/2`.
    fn project_affine(&self, z1: &RMatrix, z2: &RMatrix) -> RMatrix {
        let a1 = real_part(z1);
        let a2 = real_part(z2);
        symmetrize(&((a1 + self.y - a2) * 0.5))
    }
}

fn frob_dist(a: &RMatrix, b: &RMatrix) -> f64 {
    (a - b).norm()
}

fn run_projection(ch: &GaussianChannel, y1_init: &RMatrix, opts: &EbOptions) -> Result<FeasibilityResult> {
    let n = ch.modes();
    let tol = opts.tol;
    let lifted = Lifted {
        y: ch.y(),
        skew_cov: omega(n),
        skew_noise: -ch.twisted_form(),
    };
    // Clip slightly inside the cones so interior-feasible problems end with a
    // strictly feasible certificate.
    let scale = 1.0 + max_abs(ch.y()) + max_abs(&lifted.skew_noise);
    let floor = 0.5 * tol * scale;

    let mut y1 = y1_init.clone();
    let (mut x1, mut x2) = lifted.point(&y1);
    let mut p1 = RMatrix::zeros(x1.nrows(), x1.ncols());
    let mut p2 = p1.clone();

    let window = opts.stall_window.max(1);
    let mut gap = f64::INFINITY;
    let mut trace = Vec::new();
    let mut last_window_gap = f64::NAN;

    for iter in 1..=opts.max_iter {
        let u1 = &x1 + &p1;
        let u2 = &x2 + &p2;
        let c1 = clip_psd(&u1, floor);
        let c2 = clip_psd(&u2, floor);
        p1 = u1 - &c1;
        p2 = u2 - &c2;
        y1 = lifted.project_affine(&c1, &c2);
        let (nx1, nx2) = lifted.point(&y1);
        gap = (frob_dist(&c1, &nx1).powi(2) + frob_dist(&c2, &nx2).powi(2)).sqrt();
        x1 = nx1;
        x2 = nx2;

        let y2 = ch.y() - &y1;
        let (cov, noise) = split_reports(ch, &y1, &y2, tol)?;
        if cov.is_psd && noise.is_psd {
            let cert = EbCertificate::new(ch, y1.clone(), y2, tol)?;
            if cert.is_valid(tol) {
                trace.push(gap);
                return Ok(FeasibilityResult {
                    status: EbStatus::Feasible,
                    path: EbPath::Projection,
                    certificate: Some(cert),
                    witness: None,
                    iterations: iter,
                    gap,
                    gap_trace: trace,
                });
            }
        }

        if iter % window == 0 {
            trace.push(gap);
            if last_window_gap.is_finite() {
                let rel = (last_window_gap - gap).abs() / gap.max(f64::MIN_POSITIVE);
                if rel < opts.stall_rel_change && gap >= opts.infeasibility_floor {
                    return Ok(FeasibilityResult {
                        status: EbStatus::Infeasible,
                        path: EbPath::Projection,
                        certificate: None,
                        witness: Some(InfeasibilityWitness::StalledGap { gap }),
                        iterations: iter,
                        gap,
                        gap_trace: trace,
                    });
                }
            }
            last_window_gap = gap;
        }
    }

    Ok(FeasibilityResult {
        status: EbStatus::Undecided,
        path: EbPath::Projection,
        certificate: None,
        witness: None,
        iterations: opts.max_iter,
        gap,
        gap_trace: trace,
    })
}
