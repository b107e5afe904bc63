//! Seeded random streams.
//!
//! Every generator in the crate takes an explicit seed. A seed is expanded into
//! independent ChaCha streams so that, e.g., the `X` and `Y` draws of a random
//! channel do not shift when one of them consumes more numbers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{CMatrix, RMatrix};

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> RMatrix {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal divided out.
pub fn haar_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random symmetric PSD matrix `G G^T / cols`, scaled by `scale`.
pub fn psd_matrix<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> RMatrix {
    let g = normal_matrix(rng, dim, dim);
    let p = &g * g.transpose() * (scale / dim as f64);
    crate::matrix::symmetrize(&p)
}
