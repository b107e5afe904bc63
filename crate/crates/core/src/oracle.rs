//! Single-mode phase-space oracle on a truncated Fock space.
//!
//! Displacements follow `D(ξ) = exp[-i√2 ξ^T R]`, which in ladder form is
//! `exp(β a† - β* a)` with `β = ξ₂ - iξ₁`. Quasiprobabilities are sampled on a
//! square grid of coherent amplitudes `α`, normalized so that
//! `∫ W_s(α) d²α = 1` (the vacuum Q function peaks at `1/π`).
//!
//! Gaussian channels act on characteristic functions as
//! `χ_s,out(ξ) = χ_W,in(Xξ) · exp[-ξ^T (Y - s·1) ξ / 2]`. Negativity of
//! `W_s` for any `s < 1` rules out a nonnegative P function.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use base64::Engine;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Serialize, Serializer};

use crate::channel::{apply_to_state, GaussianChannel};
use crate::error::{Error, Result};
use crate::matrix::{non_hermiticity, CMatrix, RMatrix};
use crate::rng;
use crate::state::{gaussian_char_fn, GaussianState};
use crate::symplectic::hermitian_eigenvalues;

pub const DEFAULT_CUTOFF: usize = 40;
pub const DEFAULT_EXTENT: f64 = 6.0;
pub const DEFAULT_POINTS: usize = 256;
pub const DEFAULT_WITNESS_TOL: f64 = 1e-4;
pub const DEFAULT_S_SCHEDULE: [f64; 3] = [0.9, 0.99, 0.999];

/// Largest exponent accepted before a value is considered out of range.
const LOG_OVERFLOW: f64 = 700.0;

/// Density matrix on `span{|0⟩, …, |N⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    cutoff: usize,
    density: CMatrix,
}

impl FockState {
    /// Validates Hermiticity, unit trace and positivity to `1e-10`.
    pub fn from_density(density: CMatrix) -> Result<Self> {
        if density.nrows() != density.ncols() || density.nrows() < 2 {
            return Err(Error::InvalidDimension(format!(
                "density must be square with cutoff ≥ 1, got {}x{}",
                density.nrows(),
                density.ncols()
            )));
        }
        let herm = non_hermiticity(&density);
        if herm > 1e-12 {
            return Err(Error::ContractViolation(format!("density is not Hermitian ({herm:.3e})")));
        }
        let tr = density.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Domain(format!("density trace is {tr}, expected 1")));
        }
        let density = (&density + density.adjoint()) * Complex64::new(0.5, 0.0);
        let min = hermitian_eigenvalues(&density)?[0];
        if min < -1e-10 {
            return Err(Error::Domain(format!("density has negative eigenvalue {min:.3e}")));
        }
        Ok(Self { cutoff: density.nrows() - 1, density })
    }

    /// `|m⟩⟨m|`.
    pub fn number(m: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 1 || m > cutoff {
            return Err(Error::Domain(format!("number state {m} does not fit cutoff {cutoff}")));
        }
        let mut density = CMatrix::zeros(cutoff + 1, cutoff + 1);
        density[(m, m)] = Complex64::new(1.0, 0.0);
        Ok(Self { cutoff, density })
    }

    /// Coherent state truncated to the cutoff and renormalized.
    pub fn coherent(alpha: Complex64, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::Domain("cutoff must be at least 1".into()));
        }
        let mut amp = DVector::from_element(cutoff + 1, Complex64::new(1.0, 0.0));
        for k in 1..=cutoff {
            amp[k] = amp[k - 1] * alpha / (k as f64).sqrt();
        }
        let norm = amp.norm();
        amp /= Complex64::new(norm, 0.0);
        Ok(Self { cutoff, density: &amp * amp.adjoint() })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    /// `(⟨a⟩, ⟨a²⟩, ⟨a†a⟩)`.
    fn ladder_moments(&self) -> (Complex64, Complex64, f64) {
        let r = &self.density;
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        let mut n = 0.0;
        for k in 0..=self.cutoff {
            n += k as f64 * r[(k, k)].re;
            if k >= 1 {
                a += r[(k, k - 1)] * (k as f64).sqrt();
            }
            if k >= 2 {
                a2 += r[(k, k - 2)] * ((k * (k - 1)) as f64).sqrt();
            }
        }
        (a, a2, n)
    }

    /// Quadrature mean and covariance `(m, V)` in the same units as Gaussian states.
    pub fn moments(&self) -> (DVector<f64>, RMatrix) {
        let (a, a2, n) = self.ladder_moments();
        let m = DVector::from_row_slice(&[SQRT_2 * a.re, SQRT_2 * a.im]);
        let vxx = 2.0 * a2.re + 2.0 * n + 1.0 - 2.0 * m[0] * m[0];
        let vpp = -2.0 * a2.re + 2.0 * n + 1.0 - 2.0 * m[1] * m[1];
        let vxp = 2.0 * a2.im - 2.0 * m[0] * m[1];
        (m, DMatrix::from_row_slice(2, 2, &[vxx, vxp, vxp, vpp]))
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.ladder_moments().2
    }

    /// Nonzero entries grouped by offset `d`: `(k, ρ[k][k+d], ρ[k+d][k])`.
    fn bands(&self) -> Vec<(usize, Vec<(usize, Complex64, Complex64)>)> {
        let r = &self.density;
        let mut out = Vec::new();
        for d in 0..=self.cutoff {
            let band: Vec<_> = (0..=self.cutoff - d)
                .map(|k| (k, r[(k, k + d)], r[(k + d, k)]))
                .filter(|(_, up, lo)| up.norm() > 0.0 || lo.norm() > 0.0)
                .collect();
            if !band.is_empty() {
                out.push((d, band));
            }
        }
        out
    }
}

/// Random density supported on `|0⟩ … |support-1⟩`, `ρ = G G† / tr`.
pub fn random_fock_state(support: usize, cutoff: usize, seed: u64) -> Result<FockState> {
    if support == 0 || support > cutoff + 1 {
        return Err(Error::Domain(format!("support {support} does not fit cutoff {cutoff}")));
    }
    let mut r = rng::stream(seed, 20);
    let g = CMatrix::from_fn(support, support, |_, _| {
        Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal))
    });
    let mut rho = &g * g.adjoint();
    let tr = rho.trace();
    rho /= tr;
    let mut density = CMatrix::zeros(cutoff + 1, cutoff + 1);
    density.view_mut((0, 0), (support, support)).copy_from(&rho);
    FockState::from_density(density)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// `L_k^{(d)}(x)` for `k = 0..=kmax` by the three-term recurrence.
fn laguerre_column(d: usize, kmax: usize, x: f64) -> Vec<f64> {
    let a = d as f64;
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax >= 1 {
        out.push(1.0 + a - x);
    }
    for k in 1..kmax {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Evaluates `e^{c}·⟨k+d|D|k⟩` and `e^{c}·⟨k|D|k+d⟩` in log space.
struct Displacement {
    x: f64,
    theta: f64,
    ln_beta: f64,
    log_scale: f64,
}

impl Displacement {
    fn new(xi: [f64; 2], log_scale: f64) -> Self {
        let beta = Complex64::new(xi[1], -xi[0]);
        let x = beta.norm_sqr();
        Self { x, theta: beta.arg(), ln_beta: beta.norm().ln(), log_scale }
    }

    fn band(&self, d: usize, kmax: usize, lnf: &[f64]) -> Result<Vec<(Complex64, Complex64)>> {
        let lag = laguerre_column(d, kmax, self.x);
        let lower_phase = Complex64::from_polar(1.0, d as f64 * self.theta);
        let upper_phase = if d.is_multiple_of(2) { lower_phase.conj() } else { -lower_phase.conj() };
        let mut out = Vec::with_capacity(kmax + 1);
        for (k, l) in lag.into_iter().enumerate() {
            if (d > 0 && self.x == 0.0) || l == 0.0 {
                out.push((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
                continue;
            }
            let mut log_mag = 0.5 * (lnf[k] - lnf[k + d]) + self.log_scale - 0.5 * self.x + l.abs().ln();
            if d > 0 {
                log_mag += d as f64 * self.ln_beta;
            }
            if log_mag > LOG_OVERFLOW {
                return Err(Error::Range(format!(
                    "displacement element exceeds range at |ξ|² = {:.3}; reduce the grid extent or point count",
                    self.x
                )));
            }
            let mag = l.signum() * log_mag.exp();
            out.push((lower_phase * mag, upper_phase * mag));
        }
        Ok(out)
    }
}

/// `⟨m|D(ξ)|n⟩` for `m, n ≤ cutoff`.
pub fn displacement_matrix(xi: [f64; 2], cutoff: usize) -> Result<CMatrix> {
    if cutoff < 1 {
        return Err(Error::Domain("cutoff must be at least 1".into()));
    }
    let lnf = ln_factorials(2 * cutoff + 1);
    let disp = Displacement::new(xi, 0.0);
    let mut out = CMatrix::zeros(cutoff + 1, cutoff + 1);
    for d in 0..=cutoff {
        for (k, (lo, up)) in disp.band(d, cutoff - d, &lnf)?.into_iter().enumerate() {
            out[(k + d, k)] = lo;
            out[(k, k + d)] = up;
        }
    }
    Ok(out)
}

/// `e^{c} · tr[ρ D(η)]`.
fn scaled_trace(state: &FockState, bands: &[(usize, Vec<(usize, Complex64, Complex64)>)], lnf: &[f64], eta: [f64; 2], c: f64) -> Result<Complex64> {
    let disp = Displacement::new(eta, c);
    let mut acc = Complex64::new(0.0, 0.0);
    for (d, band) in bands {
        let kmax = band.last().map(|e| e.0).unwrap_or(0);
        let elems = disp.band(*d, kmax.min(state.cutoff - d), lnf)?;
        for &(k, up, lo) in band {
            let (d_lower, d_upper) = elems[k];
            // tr[ρD] = Σ ρ[n][m] D[m][n]
            acc += up * d_lower;
            if *d > 0 {
                acc += lo * d_upper;
            }
        }
    }
    Ok(acc)
}

fn check_order(s: f64) -> Result<()> {
    if !(s.abs() <= 1.0) {
        return Err(Error::Domain(format!("order parameter s must lie in [-1, 1], got {s}")));
    }
    Ok(())
}

/// `χ_s(ξ) = e^{s|ξ|²/2} tr[ρ D(ξ)]`.
pub fn char_fn(state: &FockState, xi: [f64; 2], s: f64) -> Result<Complex64> {
    check_order(s)?;
    let lnf = ln_factorials(2 * state.cutoff + 1);
    let c = 0.5 * s * (xi[0] * xi[0] + xi[1] * xi[1]);
    scaled_trace(state, &state.bands(), &lnf, xi, c)
}

/// Input to the oracle: a truncated Fock state or a Gaussian state.
#[derive(Debug, Clone)]
pub enum OracleInput {
    Fock(FockState),
    Gaussian(GaussianState),
}

impl fmt::Display for OracleInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleInput::Fock(st) => {
                let r = st.density();
                let diag = (0..=st.cutoff).filter(|&k| r[(k, k)].re > 1.0 - 1e-12).collect::<Vec<_>>();
                match diag.as_slice() {
                    [m] => write!(f, "fock:{m} (cutoff {})", st.cutoff),
                    _ => write!(f, "fock density (cutoff {}, ⟨n⟩ = {:.4})", st.cutoff, st.mean_photon_number()),
                }
            }
            OracleInput::Gaussian(g) => write!(
                f,
                "gaussian (V = [{:.4}, {:.4}; {:.4}, {:.4}], mean = [{:.4}, {:.4}])",
                g.cov()[(0, 0)],
                g.cov()[(0, 1)],
                g.cov()[(1, 0)],
                g.cov()[(1, 1)],
                g.mean()[0],
                g.mean()[1]
            ),
        }
    }
}

fn require_single_mode(ch: &GaussianChannel) -> Result<()> {
    if ch.modes() != 1 {
        return Err(Error::InvalidDimension(format!(
            "the phase-space oracle is single mode, channel has {} modes",
            ch.modes()
        )));
    }
    Ok(())
}

/// Output mean photon number; rejected above `cutoff / 4` for Fock inputs.
pub fn output_photon_number(ch: &GaussianChannel, input: &OracleInput) -> Result<f64> {
    require_single_mode(ch)?;
    match input {
        OracleInput::Fock(st) => {
            let (m, v) = st.moments();
            let out = GaussianState::from_parts_unchecked(m, v);
            let nbar = apply_to_state(ch, &out)?.mean_photon_number();
            let limit = st.cutoff as f64 / 4.0;
            if nbar > limit {
                return Err(Error::Range(format!(
                    "output mean photon number {nbar:.3} exceeds cutoff/4 = {limit:.2}; raise the cutoff"
                )));
            }
            Ok(nbar)
        }
        OracleInput::Gaussian(g) => Ok(apply_to_state(ch, g)?.mean_photon_number()),
    }
}

/// Evaluates `χ_s,out` at many points for one input.
struct OutputCharFn<'a> {
    ch: &'a GaussianChannel,
    input: &'a OracleInput,
    s: f64,
    bands: Vec<(usize, Vec<(usize, Complex64, Complex64)>)>,
    lnf: Vec<f64>,
    gaussian_out: Option<GaussianState>,
}

impl<'a> OutputCharFn<'a> {
    fn new(ch: &'a GaussianChannel, input: &'a OracleInput, s: f64) -> Result<Self> {
        require_single_mode(ch)?;
        check_order(s)?;
        let (bands, lnf, gaussian_out) = match input {
            OracleInput::Fock(st) => (st.bands(), ln_factorials(2 * st.cutoff + 1), None),
            OracleInput::Gaussian(g) => (Vec::new(), Vec::new(), Some(apply_to_state(ch, g)?)),
        };
        Ok(Self { ch, input, s, bands, lnf, gaussian_out })
    }

    fn eval(&self, xi: [f64; 2]) -> Result<Complex64> {
        if let Some(g) = &self.gaussian_out {
            return gaussian_char_fn(g, &xi, self.s);
        }
        let OracleInput::Fock(st) = self.input else { unreachable!() };
        let x = self.ch.x();
        let y = self.ch.y();
        let eta = [x[(0, 0)] * xi[0] + x[(0, 1)] * xi[1], x[(1, 0)] * xi[0] + x[(1, 1)] * xi[1]];
        let quad = y[(0, 0)] * xi[0] * xi[0] + 2.0 * y[(0, 1)] * xi[0] * xi[1] + y[(1, 1)] * xi[1] * xi[1]
            - self.s * (xi[0] * xi[0] + xi[1] * xi[1]);
        scaled_trace(st, &self.bands, &self.lnf, eta, -0.5 * quad)
    }
}

/// `χ_s,out(ξ)` for one input through a single-mode channel.
pub fn output_char_fn(ch: &GaussianChannel, input: &OracleInput, xi: [f64; 2], s: f64) -> Result<Complex64> {
    OutputCharFn::new(ch, input, s)?.eval(xi)
}

fn serialize_base64<S: Serializer>(values: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    ser.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
}

/// `W_s` sampled at `α = a₁ + i a₂`, `a = -L + k·(2L/M)`.
///
/// `values` is row major: row `i` holds `Im α = a_i`, column `j` holds `Re α = a_j`.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiProbGrid {
    pub s: f64,
    pub extent: f64,
    pub points: usize,
    /// Largest imaginary part discarded after the transform.
    pub max_imag: f64,
    pub encoding: &'static str,
    #[serde(serialize_with = "serialize_base64")]
    pub values: Vec<f64>,
}

impl QuasiProbGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        -self.extent + k as f64 * self.spacing()
    }

    pub fn value(&self, re_index: usize, im_index: usize) -> f64 {
        self.values[im_index * self.points + re_index]
    }

    /// Smallest value and where it occurs.
    pub fn min(&self) -> (f64, Complex64) {
        let (idx, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let alpha = Complex64::new(self.coordinate(idx % self.points), self.coordinate(idx / self.points));
        (v, alpha)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn riemann_sum(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing().powi(2)
    }

    /// Binary greyscale image, `Im α` increasing upward; black is the minimum.
    pub fn to_pgm(&self) -> Vec<u8> {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.max();
        let span = if hi > lo { hi - lo } else { 1.0 };
        let m = self.points;
        let mut out = format!("P5\n{m} {m}\n255\n").into_bytes();
        for i in (0..m).rev() {
            for j in 0..m {
                let t = (self.values[i * m + j] - lo) / span;
                out.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }
}

/// FFT quasiprobability of the channel output; `s < 1`.
pub fn quasiprob_grid(ch: &GaussianChannel, input: &OracleInput, s: f64, extent: f64, points: usize) -> Result<QuasiProbGrid> {
    if !(s < 1.0) || s < -1.0 {
        return Err(Error::Domain(format!(
            "grids need -1 ≤ s < 1, got {s}; the P function (s = 1) is not sampled"
        )));
    }
    if points < 64 || !points.is_power_of_two() {
        return Err(Error::Domain(format!("points must be a power of two ≥ 64, got {points}")));
    }
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::Domain(format!("extent must be positive, got {extent}")));
    }
    output_photon_number(ch, input)?;
    let f = OutputCharFn::new(ch, input, s)?;
    let m = points;
    let half = (m / 2) as f64;
    let dxi = PI / (2.0 * extent);

    // Row index runs over ξ₂, column index over ξ₁, with (-1)^{k+l} centring.
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    data.par_chunks_mut(m).enumerate().try_for_each(|(k2, row)| -> Result<()> {
        let xi2 = (k2 as f64 - half) * dxi;
        for (k1, cell) in row.iter_mut().enumerate() {
            let xi1 = (k1 as f64 - half) * dxi;
            let sign = if (k1 + k2) % 2 == 0 { 1.0 } else { -1.0 };
            *cell = f.eval([xi1, xi2])? * sign;
        }
        Ok(())
    })?;

    let fft = FftPlanner::new().plan_fft(m, FftDirection::Inverse);
    for row in data.chunks_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            col[i] = data[i * m + j];
        }
        fft.process(&mut col);
        for i in 0..m {
            data[i * m + j] = col[i];
        }
    }

    let scale = dxi * dxi / (PI * PI);
    let mut max_imag = 0.0_f64;
    let values = data
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let sign = if (idx / m + idx % m).is_multiple_of(2) { scale } else { -scale };
            max_imag = max_imag.max((z.im * sign).abs());
            z.re * sign
        })
        .collect();
    Ok(QuasiProbGrid { s, extent, points, max_imag, encoding: "base64 f64 little-endian, row-major", values })
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub input: String,
    pub s: f64,
    /// `[Re α*, Im α*]`.
    pub location: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct WitnessOptions {
    pub s_schedule: Vec<f64>,
    pub extent: f64,
    pub points: usize,
    pub witness_tol: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            s_schedule: DEFAULT_S_SCHEDULE.to_vec(),
            extent: DEFAULT_EXTENT,
            points: DEFAULT_POINTS,
            witness_tol: DEFAULT_WITNESS_TOL,
        }
    }
}

/// One `(input, s)` grid evaluated during a scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    pub input: String,
    pub s: f64,
    pub min: f64,
    pub location: [f64; 2],
    pub riemann_sum: f64,
    pub max_imag: f64,
}

#[derive(Debug, Clone)]
pub struct WitnessScan {
    pub witness: Option<Witness>,
    pub records: Vec<ScanRecord>,
    /// The grid of the witness, or of the last scan when none fired.
    pub grid: Option<QuasiProbGrid>,
}

/// Scans inputs × `s_schedule` in order and stops at the first witness.
pub fn witness_scan(ch: &GaussianChannel, inputs: &[OracleInput], opts: &WitnessOptions) -> Result<WitnessScan> {
    require_single_mode(ch)?;
    if let Some(bad) = opts.s_schedule.iter().find(|s| !(**s < 1.0)) {
        return Err(Error::Domain(format!("s schedule values must be below 1, got {bad}")));
    }
    let mut records = Vec::new();
    let mut last = None;
    for input in inputs {
        let label = input.to_string();
        for &s in &opts.s_schedule {
            let grid = quasiprob_grid(ch, input, s, opts.extent, opts.points)?;
            let (value, alpha) = grid.min();
            records.push(ScanRecord {
                input: label.clone(),
                s,
                min: value,
                location: [alpha.re, alpha.im],
                riemann_sum: grid.riemann_sum(),
                max_imag: grid.max_imag,
            });
            if value < -opts.witness_tol {
                let witness = Witness { input: label, s, location: [alpha.re, alpha.im], value };
                return Ok(WitnessScan { witness: Some(witness), records, grid: Some(grid) });
            }
            last = Some(grid);
        }
    }
    Ok(WitnessScan { witness: None, records, grid: last })
}

/// First `(input, s)` whose output grid dips below `-witness_tol`.
///
/// A witness proves the channel is not nonclassicality breaking; finding none
/// proves nothing.
pub fn witness_search(ch: &GaussianChannel, inputs: &[OracleInput], opts: &WitnessOptions) -> Result<Option<Witness>> {
    Ok(witness_scan(ch, inputs, opts)?.witness)
}
