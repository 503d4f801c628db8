//! The operator F on Sym(2n),
//!
//! ```text
//! F(M) = det^{1/2}[½(M + JᵀMJ) + I] − 1   if M + JᵀMJ ≥ −I
//!      = −1                               otherwise,
//! ```
//!
//! its gradient, and Monte-Carlo probes of the structural conditions: monotone
//! under PSD perturbations (H1), F(0) = 0 (H2), uniform ellipticity near zero
//! with constant θ (H3), and bounded second derivatives K (H4).
//!
//! The probes are empirical. They report sampled extremes together with the
//! sample count and never certify the constants rigorously.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    det_sqrt_from_eigenvalues, format_f64, j_conjugate, j_project, psd_tolerance, sample,
    SymMatrix,
};

/// Slack in the H1 comparison.
pub const H1_TOLERANCE: f64 = 1e-12;

/// Distance from the branch boundary required by [`grad_f`].
pub const GRADIENT_BRANCH_MARGIN: f64 = 1e-6;

/// Step of the second-difference quotients used by [`estimate_k`].
pub const SECOND_DIFFERENCE_STEP: f64 = 1e-3;

/// Lower end of the norm range for random PSD perturbations, as a fraction of δ.
const MIN_PERTURBATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Regular,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorValue {
    pub value: f64,
    pub branch: Branch,
}

/// M + JᵀMJ.
fn symmetrized(m: &SymMatrix) -> SymMatrix {
    m + &j_conjugate(m)
}

fn check_even(m: &SymMatrix) {
    assert!(m.dim() % 2 == 0 && m.dim() > 0, "F acts on Sym(2n)");
}

/// Evaluates F. Total on Sym(2n).
pub fn eval_f(m: &SymMatrix) -> OperatorValue {
    check_even(m);
    let ev = symmetrized(m).eigenvalues();
    let norm = ev.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if ev[0] < -1.0 - psd_tolerance(norm) {
        return OperatorValue {
            value: -1.0,
            branch: Branch::Degenerate,
        };
    }
    // eigenvalues of ½(M + JᵀMJ) + I
    let shifted: Vec<f64> = ev.iter().map(|l| 0.5 * l + 1.0).collect();
    OperatorValue {
        value: det_sqrt_from_eigenvalues(&shifted) - 1.0,
        branch: Branch::Regular,
    }
}

/// Gradient of F with respect to the Frobenius pairing, dF(M)[E] = tr(∇F(M) E).
///
/// With N = ½(M + JᵀMJ) + I the gradient is the projection of ½ det^{1/2}(N) N⁻¹.
pub fn grad_f(m: &SymMatrix) -> Result<SymMatrix> {
    check_even(m);
    let s = symmetrized(m);
    let min_eigen = s.min_eigenvalue();
    if min_eigen <= -1.0 + GRADIENT_BRANCH_MARGIN {
        return Err(Error::DegenerateBranch { min_eigen });
    }
    let n_mat = &s.scale(0.5) + &SymMatrix::identity(m.dim());
    let (values, _) = n_mat.eigen();
    let root_det = det_sqrt_from_eigenvalues(&values);
    let inv = n_mat.map_spectrum(|l| 1.0 / l);
    Ok(j_project(&inv.scale(0.5 * root_det)))
}

/// H1 at a single pair: F(M + P) ≥ F(M) up to [`H1_TOLERANCE`].
pub fn check_h1(m: &SymMatrix, p: &SymMatrix) -> Result<bool> {
    let ev = p.eigenvalues();
    let norm = ev.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if ev[0] < -psd_tolerance(norm) {
        return Err(Error::PNotPsd { min_eigen: ev[0] });
    }
    Ok(eval_f(&(m + p)).value >= eval_f(m).value - H1_TOLERANCE)
}

/// Second-order mixed difference quotient of F in directions `e1`, `e2`.
pub fn second_directional_derivative(m: &SymMatrix, e1: &SymMatrix, e2: &SymMatrix, step: f64) -> f64 {
    let a = e1.scale(step);
    let b = e2.scale(step);
    let f = |x: SymMatrix| eval_f(&x).value;
    let pp = f(&(m + &a) + &b);
    let pm = f(&(m + &a) - &b);
    let mp = f(&(m - &a) + &b);
    let mm = f(&(m - &a) - &b);
    ((pp - pm) - (mp - mm)) / (4.0 * step * step)
}

/// A symmetric Q with Q + JᵀQJ = 0, i.e. Q = [[A, B], [B, −A]] with A, B symmetric.
pub fn random_pluriharmonic<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> SymMatrix {
    let a = SymMatrix::from_fn(n, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0));
    let b = SymMatrix::from_fn(n, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0));
    SymMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a.get(i, j),
        (true, false) => b.get(i, j - n),
        (false, true) => b.get(i - n, j),
        (false, false) => -a.get(i - n, j - n),
    })
}

fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 / 3.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

/// Empirical constants of the family ℱ_{δ,θ,K}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyConstants {
    pub delta: f64,
    pub theta_hat: f64,
    pub theta_inv_hat: f64,
    pub k_hat: f64,
    pub sample_count: usize,
    pub master_seed: u64,
}

impl FamilyConstants {
    pub const CSV_HEADER: &'static str = "delta,theta_hat,theta_inv_hat,K_hat,samples,master_seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            format_f64(self.delta),
            format_f64(self.theta_hat),
            format_f64(self.theta_inv_hat),
            format_f64(self.k_hat),
            self.sample_count,
            self.master_seed
        )
    }
}

/// Sampled range of the H3 ratio (F(M+P) − F(M)) / ‖P‖.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityEstimate {
    pub theta_hat: f64,
    pub theta_inv_hat: f64,
    /// Number of (M, P) pairs evaluated, including the axis-aligned rank-one ones.
    pub pairs: usize,
}

/// H3 ratio for a single pair.
pub fn ellipticity_ratio(m: &SymMatrix, p: &SymMatrix) -> f64 {
    (eval_f(&(m + p)).value - eval_f(m).value) / p.spectral_norm()
}

/// Samples M with ‖M‖ ≤ δ and PSD P with ‖P‖ ≤ δ; every M is also paired with the
/// 2n axis-aligned rank-one perturbations δ·eₐeₐᵀ.
pub fn estimate_theta(n: usize, delta: f64, samples: usize, master_seed: u64) -> Result<EllipticityEstimate> {
    validate_delta(delta)?;
    let dim = 2 * n;
    let (lo, hi, pairs) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample::stream_rng(master_seed, i as u64);
            let m = sample::symmetric(&mut rng, dim, delta);
            let p = loop {
                let p = sample::psd(&mut rng, dim, 1.0);
                let norm = p.spectral_norm();
                if norm > 0.0 {
                    let target = delta * rng.random_range(MIN_PERTURBATION_FRACTION..=1.0);
                    break p.scale(target / norm);
                }
            };
            let base = eval_f(&m).value;
            let ratio = |p: &SymMatrix| (eval_f(&(&m + p)).value - base) / p.spectral_norm();
            let mut lo = ratio(&p);
            let mut hi = lo;
            for a in 0..dim {
                let mut axis = SymMatrix::zeros(dim);
                axis.set(a, a, delta);
                let r = ratio(&axis);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            (lo, hi, 1 + dim)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY, 0),
            |a, b| (a.0.min(b.0), a.1.max(b.1), a.2 + b.2),
        );
    Ok(EllipticityEstimate {
        theta_hat: lo,
        theta_inv_hat: hi,
        pairs,
    })
}

/// Largest sampled |D²F(M)[E₁, E₂]| over ‖M‖ ≤ δ and unit-norm symmetric directions.
pub fn estimate_k(n: usize, delta: f64, samples: usize, master_seed: u64) -> Result<f64> {
    validate_delta(delta)?;
    let dim = 2 * n;
    // distinct stream range from estimate_theta under the same master seed
    let offset = 1u64 << 40;
    let k = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample::stream_rng(master_seed, offset + i as u64);
            let m = sample::symmetric(&mut rng, dim, delta);
            let e1 = sample::symmetric_with_norm(&mut rng, dim, 1.0);
            let e2 = sample::symmetric_with_norm(&mut rng, dim, 1.0);
            second_directional_derivative(&m, &e1, &e2, SECOND_DIFFERENCE_STEP).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(k)
}

/// Runs both estimators with one master seed.
pub fn certify(n: usize, delta: f64, samples: usize, master_seed: u64) -> Result<FamilyConstants> {
    let theta = estimate_theta(n, delta, samples, master_seed)?;
    let k_hat = estimate_k(n, delta, samples, master_seed)?;
    Ok(FamilyConstants {
        delta,
        theta_hat: theta.theta_hat,
        theta_inv_hat: theta.theta_inv_hat,
        k_hat,
        sample_count: samples,
        master_seed,
    })
}

/// Randomized H1 sweep over ‖M‖ ≤ `m_norm`, PSD ‖P‖ ≤ `p_norm`. Returns the violation count.
pub fn h1_sweep(n: usize, pairs: usize, m_norm: f64, p_norm: f64, master_seed: u64) -> usize {
    (0..pairs)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = sample::stream_rng(master_seed, i as u64);
            let m = sample::symmetric(&mut rng, 2 * n, m_norm);
            let p = sample::psd(&mut rng, 2 * n, p_norm);
            !check_h1(&m, &p).expect("sampled P is PSD")
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central finite difference of F along a symmetric direction.
    fn fd_directional(m: &SymMatrix, e: &SymMatrix, step: f64) -> f64 {
        (eval_f(&(m + &e.scale(step))).value - eval_f(&(m - &e.scale(step))).value) / (2.0 * step)
    }

    fn unit_direction(dim: usize, i: usize, j: usize) -> SymMatrix {
        let mut e = SymMatrix::zeros(dim);
        e.set(i, j, 1.0);
        e
    }

    #[test]
    fn value_at_zero_is_exactly_zero() {
        for n in 1..=3 {
            let v = eval_f(&SymMatrix::zeros(2 * n));
            assert_eq!(v.value, 0.0);
            assert_eq!(v.branch, Branch::Regular);
        }
    }

    #[test]
    fn value_examples() {
        let v = eval_f(&SymMatrix::identity(2));
        assert!((v.value - 1.0).abs() < 1e-14);
        let v = eval_f(&SymMatrix::scaled_identity(2, -2.0));
        assert_eq!(v, OperatorValue { value: -1.0, branch: Branch::Degenerate });
        let v = eval_f(&SymMatrix::diagonal(&[1.0, -1.0]));
        assert_eq!(v.branch, Branch::Regular);
        assert!(v.value.abs() < 1e-15);
    }

    #[test]
    fn boundary_of_branch_is_regular() {
        // M + JᵀMJ = −I exactly
        let v = eval_f(&SymMatrix::scaled_identity(4, -0.5));
        assert_eq!(v.branch, Branch::Regular);
        assert!((v.value - (0.25 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn gradient_at_zero_is_half_identity() {
        let g = grad_f(&SymMatrix::zeros(4)).unwrap();
        assert!((&g - &SymMatrix::scaled_identity(4, 0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn gradient_along_identity_ray() {
        // F(cI) = (1 + c)^n − 1 with ∇F = ½(1 + c)^{n−1} I
        for n in 1..=3 {
            let c = 0.07;
            let g = grad_f(&SymMatrix::scaled_identity(2 * n, c)).unwrap();
            let expected = 0.5 * (1.0 + c).powi(n as i32 - 1);
            assert!((&g - &SymMatrix::scaled_identity(2 * n, expected)).max_abs() < 1e-14);
            let m = SymMatrix::scaled_identity(2 * n, c);
            for i in 0..2 * n {
                let fd = fd_directional(&m, &unit_direction(2 * n, i, i), 1e-5);
                assert!((fd - g.get(i, i)).abs() <= 1e-6 * g.get(i, i).abs());
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=2 {
            let dim = 2 * n;
            for _ in 0..50 {
                let m = sample::symmetric(&mut rng, dim, 0.1);
                let g = grad_f(&m).unwrap();
                for i in 0..dim {
                    for j in i..dim {
                        let e = unit_direction(dim, i, j);
                        let analytic = g.frobenius_dot(&e);
                        let fd = fd_directional(&m, &e, 1e-5);
                        let scale = analytic.abs().max(g.max_abs());
                        assert!((fd - analytic).abs() <= 1e-6 * scale, "{fd} vs {analytic}");
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_rejects_degenerate_branch() {
        let err = grad_f(&SymMatrix::scaled_identity(2, -0.5)).unwrap_err();
        assert!(matches!(err, Error::DegenerateBranch { .. }));
    }

    #[test]
    fn h1_examples() {
        let z = SymMatrix::zeros(4);
        assert!(check_h1(&z, &SymMatrix::identity(4)).unwrap());
        assert!((eval_f(&SymMatrix::identity(4)).value - 3.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = sample::symmetric(&mut rng, 4, 1.0);
        assert!(check_h1(&m, &z).unwrap());
        let err = check_h1(&m, &SymMatrix::diagonal(&[1.0, -0.1, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::PNotPsd { .. }));
    }

    #[test]
    fn h1_sweep_small() {
        assert_eq!(h1_sweep(2, 500, 1.0, 1.0, 9), 0);
        assert_eq!(h1_sweep(1, 500, 1.0, 1.0, 9), 0);
    }

    #[test]
    fn pluriharmonic_directions_are_invisible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            for _ in 0..20 {
                let q = random_pluriharmonic(&mut rng, n, 0.3);
                assert!((&q + &j_conjugate(&q)).max_abs() == 0.0);
                let m = sample::symmetric(&mut rng, 2 * n, 0.5);
                let a = eval_f(&m).value;
                let b = eval_f(&(&m + &q)).value;
                assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn ellipticity_ratio_examples() {
        let delta = 0.1;
        let z = SymMatrix::zeros(2);
        let r = ellipticity_ratio(&z, &SymMatrix::scaled_identity(2, delta));
        assert!((r - 1.0).abs() < 1e-13);
        let r = ellipticity_ratio(&z, &SymMatrix::diagonal(&[delta, 0.0]));
        assert!((r - 0.5).abs() < 1e-13);
    }

    #[test]
    fn second_derivative_along_identity() {
        let i2 = SymMatrix::identity(2);
        let d = second_directional_derivative(&SymMatrix::zeros(2), &i2, &i2, 1e-3);
        assert!(d.abs() < 1e-8);
        let i4 = SymMatrix::identity(4);
        let d = second_directional_derivative(&SymMatrix::zeros(4), &i4, &i4, 1e-3);
        assert!((d - 2.0).abs() < 1e-8);
    }

    #[test]
    fn invalid_delta_rejected() {
        assert_eq!(estimate_theta(2, 0.4, 10, 0).unwrap_err(), Error::InvalidDelta(0.4));
        assert_eq!(estimate_k(2, 0.0, 10, 0).unwrap_err(), Error::InvalidDelta(0.0));
    }

    #[test]
    fn estimates_are_positive_and_deterministic() {
        let a = certify(2, 0.1, 300, 77).unwrap();
        let b = certify(2, 0.1, 300, 77).unwrap();
        assert_eq!(a, b);
        assert!(a.theta_hat > 0.0 && a.theta_hat <= a.theta_inv_hat);
        assert!(a.k_hat.is_finite() && a.k_hat >= 0.0);
        assert!(a.csv_row().ends_with(",300,77"));
    }
}
