//! Random matrices for Monte-Carlo sweeps and tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rand::SeedableRng;

use super::matrix::{HermitianMatrix, SymMatrix};

/// Deterministic per-item generator: stream `index` of the master seed.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-ish orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    g.qr().q()
}

/// Symmetric matrix with spectral norm exactly `norm` (zero when `norm == 0`).
pub fn symmetric_with_norm<R: Rng + ?Sized>(rng: &mut R, dim: usize, norm: f64) -> SymMatrix {
    let g = SymMatrix::from_fn(dim, |_, _| gaussian(rng));
    let s = g.spectral_norm();
    if s == 0.0 {
        return SymMatrix::zeros(dim);
    }
    g.scale(norm / s)
}

/// Symmetric matrix with spectral norm uniform in [0, `max_norm`].
pub fn symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_norm: f64) -> SymMatrix {
    let norm = max_norm * rng.random::<f64>();
    symmetric_with_norm(rng, dim, norm)
}

/// Positive semidefinite matrix with spectral norm uniform in [0, `max_norm`].
///
/// The spectrum is drawn uniformly in [0, 1] with a random number of exact zeros,
/// so boundary cases of the PSD cone are visited.
pub fn psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_norm: f64) -> SymMatrix {
    let q = orthogonal(rng, dim);
    let zeros = rng.random_range(0..dim);
    let mut spectrum: Vec<f64> = (0..dim)
        .map(|i| if i < zeros { 0.0 } else { rng.random::<f64>() })
        .collect();
    let top = spectrum.iter().cloned().fold(0.0_f64, f64::max);
    let norm = max_norm * rng.random::<f64>();
    if top > 0.0 {
        spectrum.iter_mut().for_each(|l| *l *= norm / top);
    }
    SymMatrix::diagonal(&spectrum).congruence(&q.transpose())
}

/// Random Hermitian matrix with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for i in 0..n {
        re[(i, i)] = gaussian(rng);
        for j in (i + 1)..n {
            let (a, b) = (gaussian(rng), gaussian(rng));
            re[(i, j)] = a;
            re[(j, i)] = a;
            im[(i, j)] = b;
            im[(j, i)] = -b;
        }
    }
    HermitianMatrix::new(re, im).expect("constructed Hermitian")
}

/// Random positive semidefinite Hermitian matrix G G* with G an n×k complex Gaussian.
///
/// `rank` below `n` yields singular matrices.
pub fn psd_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    use num_complex::Complex64;
    let g = DMatrix::from_fn(n, rank, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let h = &g * g.adjoint();
    let h = (&h + h.adjoint()).map(|z| z * 0.5);
    HermitianMatrix::from_complex(&h).expect("G G* is Hermitian")
}
