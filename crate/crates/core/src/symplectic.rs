//! Symplectic linear algebra over the quadrature ordering `(x1, p1, ..., xn, pn)`.
//!
//! The symplectic form is `Ω = ⊕ [[0, 1], [-1, 0]]`. A real `2n × 2n` matrix `S`
//! is symplectic when `S^T Ω S = Ω`, and it acts on covariance matrices by
//! congruence `V ↦ S^T V S`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{
    hermitize, max_abs_diff, non_hermiticity, require_square_even, require_symmetric,
    symmetrize, times_i, CMatrix, RMatrix,
};
use crate::rng;

/// Default tolerance for PSD margins.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative tolerance on Hermiticity and symmetry of inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    omega: RMatrix,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("mode count must be at least 1".into()));
        }
        Ok(Self { n, omega: omega(n) })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.omega
    }

    pub fn into_matrix(self) -> RMatrix {
        self.omega
    }
}

pub fn build_omega(n: usize) -> Result<SymplecticForm> {
    SymplecticForm::new(n)
}

/// `Ω` for `n` modes; `n = 0` gives an empty matrix.
pub(crate) fn omega(n: usize) -> RMatrix {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// `i·Ω` as a Hermitian matrix.
pub(crate) fn i_omega(n: usize) -> CMatrix {
    times_i(&omega(n))
}

/// Outcome of a positive-semidefiniteness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    /// `min_eigenvalue / (1 + max_abs_eigenvalue)`.
    pub margin: f64,
    pub is_psd: bool,
    pub tol: f64,
}

impl PsdReport {
    fn from_eigenvalues(eigenvalues: &DVector<f64>, tol: f64) -> Self {
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max_abs = eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let margin = min / (1.0 + max_abs);
        Self {
            min_eigenvalue: min,
            max_abs_eigenvalue: max_abs,
            margin,
            is_psd: margin >= -tol,
            tol,
        }
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<DVector<f64>> {
    if h.nrows() != h.ncols() {
        return Err(Error::InvalidDimension(format!(
            "Hermitian matrix must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let defect = non_hermiticity(h);
    if defect > HERMITIAN_TOL {
        return Err(Error::ContractViolation(format!(
            "matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    let mut ev = SymmetricEigen::new(hermitize(h)).eigenvalues;
    ev.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

pub fn hermitian_min_eigenvalue(h: &CMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(h)?;
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn check_psd(h: &CMatrix, tol: f64) -> Result<PsdReport> {
    if !(tol > 0.0) {
        return Err(Error::ContractViolation(format!("tolerance must be positive, got {tol}")));
    }
    let ev = hermitian_eigenvalues(h)?;
    Ok(PsdReport::from_eigenvalues(&ev, tol))
}

/// PSD test for a real symmetric matrix.
pub fn check_psd_real(m: &RMatrix, tol: f64) -> Result<PsdReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimension("matrix must be square".into()));
    }
    require_symmetric(m, HERMITIAN_TOL, "matrix")?;
    let ev = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    Ok(PsdReport::from_eigenvalues(&ev, tol))
}

/// `(S^T Ω S ≈ Ω, max |S^T Ω S - Ω|)`.
pub fn is_symplectic(s: &RMatrix, tol: f64) -> Result<(bool, f64)> {
    let n = require_square_even(s, "symplectic matrix")?;
    let om = omega(n);
    let residual = max_abs_diff(&(s.transpose() * &om * s), &om);
    Ok((residual <= tol, residual))
}

pub(crate) fn require_symplectic(s: &RMatrix, tol: f64, what: &str) -> Result<usize> {
    let n = require_square_even(s, what)?;
    let (ok, residual) = is_symplectic(s, tol)?;
    if !ok {
        return Err(Error::ContractViolation(format!(
            "{what} is not symplectic (residual {residual:.3e})"
        )));
    }
    Ok(n)
}

/// Inverse of a symplectic matrix, `S^{-1} = -Ω S^T Ω`.
pub fn symplectic_inverse(s: &RMatrix) -> RMatrix {
    let om = omega(s.nrows() / 2);
    -(&om * s.transpose() * &om)
}

/// `S^T V S = diag(ν1, ν1, ..., νn, νn)` with `S` symplectic.
#[derive(Debug, Clone, Serialize)]
pub struct WilliamsonDecomposition {
    #[serde(with = "crate::matrix::row_major")]
    pub s_matrix: RMatrix,
    /// Symplectic eigenvalues, descending.
    pub nu: Vec<f64>,
}

impl WilliamsonDecomposition {
    /// `diag(ν1, ν1, ..., νn, νn)`.
    pub fn normal_form(&self) -> RMatrix {
        let d: Vec<f64> = self.nu.iter().flat_map(|&v| [v, v]).collect();
        DMatrix::from_diagonal(&DVector::from_vec(d))
    }
}

/// Williamson normal form of a symmetric positive-definite matrix.
///
/// With `A = V^{-1/2} Ω V^{-1/2}` skew-symmetric, the Hermitian matrix `iA` has
/// eigenvalues `±κ_i`. An eigenvector `u` for `+κ` gives the orthonormal pair
/// `(√2 Im u, √2 Re u)` on which `A` acts as `κ [[0, 1], [-1, 0]]`. Collecting
/// those pairs into `O`, `S = V^{-1/2} O diag(κ^{-1/2})` and `ν = 1/κ`.
pub fn williamson(v: &RMatrix) -> Result<WilliamsonDecomposition> {
    let n = require_square_even(v, "covariance matrix")?;
    require_symmetric(v, HERMITIAN_TOL, "covariance matrix")?;
    let v = symmetrize(v);

    let eig = SymmetricEigen::new(v.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Domain(format!(
            "Williamson decomposition needs a positive-definite matrix (min eigenvalue {min:.3e})"
        )));
    }
    let inv_sqrt = DVector::from_iterator(2 * n, eig.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let v_inv_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let v_inv_sqrt = symmetrize(&v_inv_sqrt);

    let a = &v_inv_sqrt * omega(n) * &v_inv_sqrt;
    let a = (&a - a.transpose()) * 0.5;
    let ia = hermitize(&times_i(&a));
    let ceig = SymmetricEigen::new(ia);

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| ceig.eigenvalues[j].total_cmp(&ceig.eigenvalues[i]));
    // The n largest eigenvalues are the +κ branch; sort them ascending so ν is descending.
    let mut positive: Vec<usize> = order[..n].to_vec();
    positive.sort_by(|&i, &j| ceig.eigenvalues[i].total_cmp(&ceig.eigenvalues[j]));

    let mut o = DMatrix::zeros(2 * n, 2 * n);
    let mut scale = DVector::zeros(2 * n);
    let mut nu = Vec::with_capacity(n);
    let sqrt2 = std::f64::consts::SQRT_2;
    for (k, &idx) in positive.iter().enumerate() {
        let kappa = ceig.eigenvalues[idx];
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!(
                "degenerate symplectic spectrum (κ = {kappa:.3e})"
            )));
        }
        let u = ceig.eigenvectors.column(idx);
        for r in 0..2 * n {
            o[(r, 2 * k)] = sqrt2 * u[r].im;
            o[(r, 2 * k + 1)] = sqrt2 * u[r].re;
        }
        let f = kappa.sqrt().recip();
        scale[2 * k] = f;
        scale[2 * k + 1] = f;
        nu.push(kappa.recip());
    }
    let s_matrix = v_inv_sqrt * o * DMatrix::from_diagonal(&scale);
    Ok(WilliamsonDecomposition { s_matrix, nu })
}

/// `S = R1 · D(ν) · R2` with `R1`, `R2` orthogonal symplectic and
/// `D(ν) = diag(ν1, 1/ν1, ..., νn, 1/νn)`.
#[derive(Debug, Clone, Serialize)]
pub struct EulerDecomposition {
    #[serde(with = "crate::matrix::row_major")]
    pub r1: RMatrix,
    #[serde(with = "crate::matrix::row_major")]
    pub r2: RMatrix,
    /// Squeezing values `ν_i ≥ 1`, descending.
    pub d: Vec<f64>,
}

impl EulerDecomposition {
    pub fn squeezer(&self) -> RMatrix {
        squeezer(&self.d)
    }

    pub fn reconstruct(&self) -> RMatrix {
        &self.r1 * self.squeezer() * &self.r2
    }
}

/// `diag(ν1, 1/ν1, ..., νn, 1/νn)`.
pub fn squeezer(d: &[f64]) -> RMatrix {
    let diag: Vec<f64> = d.iter().flat_map(|&v| [v, v.recip()]).collect();
    DMatrix::from_diagonal(&DVector::from_vec(diag))
}

/// Euler (Bloch–Messiah) decomposition.
///
/// `P = S^T S` is symmetric positive-definite and symplectic, so its spectrum
/// comes in pairs `ν², ν⁻²` and `Ω^T` maps the `ν²` eigenvector to the `ν⁻²` one.
/// The top-`n` eigenvectors `v_i` are made symplectically orthonormal and paired
/// with `w_i = Ω^T v_i`; `Q = [v1, w1, ...]` satisfies `Q^T P Q = D²`, giving
/// `R2 = Q^T` and `R1 = S Q D^{-1}`.
pub fn euler_decompose(s: &RMatrix) -> Result<EulerDecomposition> {
    let n = require_symplectic(s, 1e-8, "matrix")?;
    let om = omega(n);
    let p = symmetrize(&(s.transpose() * s));
    let eig = SymmetricEigen::new(p.clone());

    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let om_t = om.transpose();
    let mut vs: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut ws: Vec<DVector<f64>> = Vec::with_capacity(n);
    for &idx in order.iter() {
        if vs.len() == n {
            break;
        }
        let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        // Two passes of symplectic Gram-Schmidt against the accepted pairs.
        for _ in 0..2 {
            for (vj, wj) in vs.iter().zip(ws.iter()) {
                let a = vj.dot(&v);
                let b = wj.dot(&v);
                v -= vj * a + wj * b;
            }
        }
        let norm = v.norm();
        if norm < 1e-6 {
            continue;
        }
        v /= norm;
        canonical_sign(&mut v);
        let w = &om_t * &v;
        vs.push(v);
        ws.push(w);
    }
    if vs.len() != n {
        // Only possible when the top eigenvectors are numerically dependent after
        // orthogonalization; complete the basis from the unit vectors.
        for e in 0..2 * n {
            if vs.len() == n {
                break;
            }
            let mut v = DVector::zeros(2 * n);
            v[e] = 1.0;
            for _ in 0..2 {
                for (vj, wj) in vs.iter().zip(ws.iter()) {
                    let a = vj.dot(&v);
                    let b = wj.dot(&v);
                    v -= vj * a + wj * b;
                }
            }
            let norm = v.norm();
            if norm < 1e-6 {
                continue;
            }
            v /= norm;
            canonical_sign(&mut v);
            let w = &om_t * &v;
            vs.push(v);
            ws.push(w);
        }
    }

    let mut q = DMatrix::zeros(2 * n, 2 * n);
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        q.set_column(2 * k, &vs[k]);
        q.set_column(2 * k + 1, &ws[k]);
        let rayleigh = vs[k].dot(&(&p * &vs[k]));
        d.push(rayleigh.sqrt().max(1.0));
    }
    // Keep the pairs in descending order of squeezing.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let mut q_sorted = DMatrix::zeros(2 * n, 2 * n);
    let mut d_sorted = Vec::with_capacity(n);
    for (k, &src) in perm.iter().enumerate() {
        q_sorted.set_column(2 * k, &q.column(2 * src));
        q_sorted.set_column(2 * k + 1, &q.column(2 * src + 1));
        d_sorted.push(d[src]);
    }

    let inv: Vec<f64> = d_sorted.iter().flat_map(|&v| [v.recip(), v]).collect();
    let r1 = s * &q_sorted * DMatrix::from_diagonal(&DVector::from_vec(inv));
    Ok(EulerDecomposition {
        r1,
        r2: q_sorted.transpose(),
        d: d_sorted,
    })
}

/// Flip `v` so that its first entry of non-negligible size is positive.
fn canonical_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale.max(1e-300)) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// `V = s^T s + Δ` with `s` symplectic and `Δ ⪰ 0`.
#[derive(Debug, Clone)]
pub struct LowerFactor {
    pub s: RMatrix,
    pub delta: RMatrix,
}

pub fn covariance_lower_factor(v: &RMatrix, tol: f64) -> Result<LowerFactor> {
    let n = require_square_even(v, "covariance matrix")?;
    require_symmetric(v, HERMITIAN_TOL, "covariance matrix")?;
    let v = symmetrize(v);
    let h = crate::matrix::to_complex(&v) + i_omega(n);
    let report = check_psd(&h, tol)?;
    if !report.is_psd {
        return Err(Error::Domain(format!(
            "not a valid covariance matrix (V + iΩ margin {:.3e})",
            report.margin
        )));
    }
    let w = williamson(&v)?;
    // S_w^T V S_w = diag(ν) ⇒ V = s^T diag(ν) s with s = S_w^{-1}.
    let s = symplectic_inverse(&w.s_matrix);
    let delta = symmetrize(&(&v - s.transpose() * &s));
    Ok(LowerFactor { s, delta })
}

/// Random symplectic matrix `R1 D(ν) R2` with Haar-random passive parts and
/// squeezing values log-uniform in `[1, max_squeeze]`.
pub fn random_symplectic(n: usize, max_squeeze: f64, seed: u64) -> Result<RMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("mode count must be at least 1".into()));
    }
    if !(max_squeeze >= 1.0) || !max_squeeze.is_finite() {
        return Err(Error::ContractViolation(format!(
            "max_squeeze must be a finite value ≥ 1, got {max_squeeze}"
        )));
    }
    let mut r = rng::stream(seed, 0);
    let r1 = random_orthosymplectic_with(&mut r, n);
    let r2 = random_orthosymplectic_with(&mut r, n);
    let log_max = max_squeeze.ln();
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = r.random();
            (u * log_max).exp()
        })
        .collect();
    Ok(r1 * squeezer(&d) * r2)
}

/// Haar-random orthogonal symplectic matrix, i.e. the real form of an `n × n`
/// unitary acting on `(x_k + i p_k)`.
pub fn random_orthosymplectic(n: usize, seed: u64) -> RMatrix {
    let mut r = rng::stream(seed, 1);
    random_orthosymplectic_with(&mut r, n)
}

fn random_orthosymplectic_with<R: Rng>(rng: &mut R, n: usize) -> RMatrix {
    let u = rng::haar_unitary(rng, n);
    unitary_to_symplectic(&u)
}

/// Real `2n × 2n` representation of a unitary: `(x + ip) ↦ U (x + ip)`.
pub fn unitary_to_symplectic(u: &CMatrix) -> RMatrix {
    let n = u.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let z: Complex64 = u[(j, k)];
            m[(2 * j, 2 * k)] = z.re;
            m[(2 * j, 2 * k + 1)] = -z.im;
            m[(2 * j + 1, 2 * k)] = z.im;
            m[(2 * j + 1, 2 * k + 1)] = z.re;
        }
    }
    m
}

/// `max |M^T M - 1|`.
pub fn orthogonality_residual(m: &RMatrix) -> f64 {
    let id = DMatrix::identity(m.nrows(), m.ncols());
    max_abs_diff(&(m.transpose() * m), &id)
}

/// Condition number of a symmetric positive-definite matrix.
pub fn spd_condition(v: &RMatrix) -> f64 {
    let ev = SymmetricEigen::new(symmetrize(v)).eigenvalues;
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{max_abs, to_complex};

    fn diag(v: &[f64]) -> RMatrix {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn omega_single_and_two_mode() {
        let o1 = build_omega(1).unwrap();
        assert_eq!(o1.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let o2 = build_omega(2).unwrap();
        let m = o2.matrix();
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(3, 2)], -1.0);
        assert_eq!(m[(0, 3)], 0.0);
        assert_eq!(m * m, -DMatrix::<f64>::identity(4, 4));
        assert!(matches!(build_omega(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn i_omega_spectrum() {
        for n in 1..=4 {
            let ev = hermitian_eigenvalues(&i_omega(n)).unwrap();
            for k in 0..n {
                assert!((ev[k] + 1.0).abs() < 1e-12);
                assert!((ev[n + k] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_eigenvalue_examples() {
        let id = to_complex(&RMatrix::identity(2, 2));
        assert!((hermitian_min_eigenvalue(&id).unwrap() - 1.0).abs() < 1e-14);
        assert!((hermitian_min_eigenvalue(&i_omega(1)).unwrap() + 1.0).abs() < 1e-14);
        let h = &id + i_omega(1);
        assert!(hermitian_min_eigenvalue(&h).unwrap().abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = to_complex(&RMatrix::identity(2, 2));
        h[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(hermitian_min_eigenvalue(&h), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn psd_report_examples() {
        let h = to_complex(&(RMatrix::identity(2, 2) * 2.0)) + i_omega(1);
        let r = check_psd(&h, 1e-9).unwrap();
        assert!(r.is_psd);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-14);
        assert!((r.margin - 1.0 / 4.0).abs() < 1e-14);

        let r = check_psd(&i_omega(1), 1e-9).unwrap();
        assert!(!r.is_psd);

        let r = check_psd(&CMatrix::zeros(2, 2), 1e-9).unwrap();
        assert!(r.is_psd);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn symplectic_examples() {
        assert_eq!(is_symplectic(&RMatrix::identity(2, 2), 1e-12).unwrap(), (true, 0.0));
        let (ok, res) = is_symplectic(&diag(&[2.0, 0.5]), 1e-12).unwrap();
        assert!(ok && res <= 1e-15);
        let (ok, res) = is_symplectic(&diag(&[2.0, 2.0]), 1e-12).unwrap();
        assert!(!ok);
        assert!((res - 3.0).abs() < 1e-15);
        assert!(matches!(
            is_symplectic(&RMatrix::identity(3, 3), 1e-12),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn williamson_examples() {
        let w = williamson(&RMatrix::identity(2, 2)).unwrap();
        assert!((w.nu[0] - 1.0).abs() < 1e-12);
        assert!(orthogonality_residual(&w.s_matrix) < 1e-12);
        assert!(is_symplectic(&w.s_matrix, 1e-12).unwrap().0);

        let (a, b) = (4.0_f64, 1.0_f64);
        let w = williamson(&diag(&[a, b])).unwrap();
        assert!((w.nu[0] - 2.0).abs() < 1e-12);
        // S is fixed up to S → S R with R a rotation, so compare S S^T against
        // diag((b/a)^½, (a/b)^½).
        let expected = diag(&[(b / a).sqrt(), (a / b).sqrt()]);
        let sst = &w.s_matrix * w.s_matrix.transpose();
        assert!(max_abs_diff(&sst, &expected) < 1e-12);

        let e2 = std::f64::consts::E.powi(2);
        let w = williamson(&diag(&[e2, e2.recip()])).unwrap();
        assert!((w.nu[0] - 1.0).abs() < 1e-12);

        assert!(matches!(williamson(&diag(&[1.0, -1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn williamson_reconstruction_multimode() {
        for seed in 0..20 {
            let n = 1 + (seed as usize % 4);
            let s = random_symplectic(n, 3.0, seed).unwrap();
            let nus: Vec<f64> = (0..n).map(|k| 1.0 + k as f64 * 0.7 + seed as f64 * 0.01).collect();
            let d: Vec<f64> = nus.iter().flat_map(|&v| [v, v]).collect();
            let v = s.transpose() * diag(&d) * &s;
            let w = williamson(&v).unwrap();
            let nf = w.s_matrix.transpose() * &v * &w.s_matrix;
            assert!(max_abs_diff(&nf, &w.normal_form()) < 1e-9);
            assert!(is_symplectic(&w.s_matrix, 1e-10).unwrap().0);
            let mut sorted = nus.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in w.nu.iter().zip(sorted.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn euler_examples() {
        let e = euler_decompose(&RMatrix::identity(2, 2)).unwrap();
        assert!((e.d[0] - 1.0).abs() < 1e-12);
        assert!(max_abs_diff(&(&e.r1 * &e.r2), &RMatrix::identity(2, 2)) < 1e-12);

        let e = euler_decompose(&diag(&[2.0, 0.5])).unwrap();
        assert!((e.d[0] - 2.0).abs() < 1e-12);
        assert!(max_abs_diff(&e.r1, &RMatrix::identity(2, 2)) < 1e-12);
        assert!(max_abs_diff(&e.r2, &RMatrix::identity(2, 2)) < 1e-12);

        assert!(matches!(
            euler_decompose(&diag(&[2.0, 2.0])),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn euler_random_reconstruction() {
        for seed in 0..30 {
            let n = 1 + (seed as usize % 5);
            let s = random_symplectic(n, 4.0, seed).unwrap();
            let e = euler_decompose(&s).unwrap();
            assert!(max_abs_diff(&e.reconstruct(), &s) < 1e-8);
            for r in [&e.r1, &e.r2] {
                assert!(orthogonality_residual(r) < 1e-9);
                assert!(is_symplectic(r, 1e-9).unwrap().0);
            }
            assert!(e.d.windows(2).all(|w| w[0] >= w[1]));
            assert!(e.d.iter().all(|&v| (1.0..=4.0 + 1e-9).contains(&v)));
        }
    }

    #[test]
    fn euler_with_partially_unsqueezed_modes() {
        // One squeezed mode and one passive mode: the unit eigenvalue cluster
        // must still give a symplectic basis.
        let r = random_orthosymplectic(2, 7);
        let s = &r * squeezer(&[3.0, 1.0]) * random_orthosymplectic(2, 8);
        let e = euler_decompose(&s).unwrap();
        assert!(max_abs_diff(&e.reconstruct(), &s) < 1e-9);
        assert!((e.d[0] - 3.0).abs() < 1e-9);
        assert!((e.d[1] - 1.0).abs() < 1e-9);
        assert!(orthogonality_residual(&e.r1) < 1e-9);
    }

    #[test]
    fn lower_factor_examples() {
        let lf = covariance_lower_factor(&RMatrix::identity(2, 2), 1e-9).unwrap();
        assert!(max_abs_diff(&(lf.s.transpose() * &lf.s), &RMatrix::identity(2, 2)) < 1e-12);
        assert!(max_abs(&lf.delta) < 1e-12);

        let v = RMatrix::identity(2, 2) * 3.0;
        let lf = covariance_lower_factor(&v, 1e-9).unwrap();
        assert!(check_psd_real(&lf.delta, 1e-9).unwrap().margin >= 0.0);
        assert!(max_abs_diff(&(lf.s.transpose() * &lf.s + &lf.delta), &v) < 1e-12);

        let e2 = std::f64::consts::E.powi(2);
        let lf = covariance_lower_factor(&diag(&[e2, e2.recip()]), 1e-9).unwrap();
        assert!(max_abs(&lf.delta) < 1e-10);

        assert!(matches!(
            covariance_lower_factor(&(RMatrix::identity(2, 2) * 0.5), 1e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn random_symplectic_properties() {
        let s = random_symplectic(3, 1.0, 11).unwrap();
        assert!(orthogonality_residual(&s) < 1e-12);
        assert!(is_symplectic(&s, 1e-10).unwrap().0);

        let a = random_symplectic(2, 2.0, 5).unwrap();
        let b = random_symplectic(2, 2.0, 5).unwrap();
        assert_eq!(a, b);
        let c = random_symplectic(2, 2.0, 6).unwrap();
        assert_ne!(a, c);

        let s = random_symplectic(2, std::f64::consts::E, 3).unwrap();
        assert!(is_symplectic(&s, 1e-10).unwrap().0);
        let e = euler_decompose(&s).unwrap();
        assert!(e.d.iter().all(|&v| (1.0..=std::f64::consts::E + 1e-9).contains(&v)));

        assert!(random_symplectic(2, 0.5, 1).is_err());
    }
}
