//! Touching-quadratic probes for viscosity sub- and supersolutions, and the
//! Blocki function u(z, w) = |z|(1 + |w|²) on ℂ².
//!
//! A quadratic q touches u from above at p when q(p) = u(p) and q ≥ u near p.
//! The neighbourhood is discrete: every grid node within the probe radius.
//! Subsolutions require F(D²q − I) ≥ 0 for every quadratic touching from above,
//! supersolutions F(D²q − I) ≤ 0 for every one touching from below.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{complex_hessian_from_real, format_f64, sample, ScalarField, SymMatrix};
use crate::operator::{eval_f, Branch};

/// Tolerance for q(p) = u(p) and for the sign condition on the neighbourhood.
pub const TOUCH_TOLERANCE: f64 = 1e-12;

/// Operator values beyond this margin count as violations.
pub const VIOLATION_THRESHOLD: f64 = 1e-8;

/// Default probe radius, in grid cells.
pub const DEFAULT_RADIUS_CELLS: usize = 3;

/// Default bound on the spectral norm of the random Hessian bump.
pub const DEFAULT_BUMP_NORM: f64 = 0.1;

/// Smallest |z| accepted by [`blocki_det_check`].
pub const BLOCKI_SINGULAR_MARGIN: f64 = 1e-6;

/// q(x) = c + l·x + ½xᵀHx.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPolynomial {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub hessian: SymMatrix,
}

impl QuadraticPolynomial {
    pub fn new(constant: f64, linear: Vec<f64>, hessian: SymMatrix) -> Result<Self> {
        if linear.len() != hessian.dim() {
            return Err(Error::DimensionMismatch { expected: hessian.dim(), got: linear.len() });
        }
        Ok(Self { constant, linear, hessian })
    }

    /// The quadratic with value `value`, gradient `gradient` and Hessian `hessian` at `p`.
    pub fn centered(p: &[f64], value: f64, gradient: &[f64], hessian: SymMatrix) -> Result<Self> {
        if p.len() != hessian.dim() || gradient.len() != hessian.dim() {
            return Err(Error::DimensionMismatch { expected: hessian.dim(), got: p.len() });
        }
        let hp = hessian.apply(p);
        let linear: Vec<f64> = gradient.iter().zip(&hp).map(|(g, v)| g - v).collect();
        let constant = value - dot(gradient, p) + 0.5 * dot(p, &hp);
        Ok(Self { constant, linear, hessian })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + dot(&self.linear, x) + 0.5 * self.hessian.quadratic_form(x)
    }

    pub fn add_quadratic_bump(&self, p: &[f64], eps: f64) -> Self {
        let shifted = Self::centered(
            p,
            self.eval(p),
            &self.gradient_at(p),
            &self.hessian + &SymMatrix::scaled_identity(self.dim(), 2.0 * eps),
        );
        shifted.expect("dimensions already checked")
    }

    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let hx = self.hessian.apply(x);
        self.linear.iter().zip(&hx).map(|(l, v)| l + v).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Above,
    Below,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Self::Above => 1.0,
            Self::Below => -1.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Above => "above",
            Self::Below => "below",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchingReport {
    pub point: usize,
    pub direction: Direction,
    pub polynomial: QuadraticPolynomial,
    /// min over the neighbourhood of ±(q − u).
    pub gap: f64,
    /// F(D²q − I).
    pub operator_value: f64,
    pub branch: Branch,
    pub seed: u64,
    pub trial: usize,
}

impl TouchingReport {
    pub const CSV_HEADER: &'static str = "node,coords,direction,gap,operator_value,seed,trial";

    pub fn touching(&self) -> bool {
        self.gap >= -TOUCH_TOLERANCE
    }

    pub fn is_violation(&self) -> bool {
        if !self.touching() {
            return false;
        }
        match self.direction {
            Direction::Above => self.operator_value < -VIOLATION_THRESHOLD,
            Direction::Below => {
                self.branch == Branch::Regular && self.operator_value > VIOLATION_THRESHOLD
            }
        }
    }

    pub fn csv_row(&self, u: &ScalarField) -> String {
        let coords: Vec<String> = u.coords(self.point).into_iter().map(format_f64).collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.point,
            coords.join(" "),
            self.direction,
            format_f64(self.gap),
            format_f64(self.operator_value),
            self.seed,
            self.trial
        )
    }
}

/// Grid nodes within `radius` of `node` (including `node`), or an error when
/// the ball leaves the grid.
fn neighbourhood(u: &ScalarField, node: usize, radius: f64) -> Result<Vec<usize>> {
    let dim = u.dim();
    let index = u.multi_index(node);
    let m = u.points_per_axis();
    let mut reach = Vec::with_capacity(dim);
    for a in 0..dim {
        let cells = (radius / u.spacing(a) + 1e-9).floor() as usize;
        if index[a] < cells || index[a] + cells >= m {
            return Err(Error::RadiusExceedsGrid { radius });
        }
        reach.push(cells);
    }
    let mut out = Vec::new();
    let mut offset: Vec<isize> = reach.iter().map(|&r| -(r as isize)).collect();
    loop {
        let dist_sq: f64 = (0..dim)
            .map(|a| {
                let d = offset[a] as f64 * u.spacing(a);
                d * d
            })
            .sum();
        if dist_sq <= radius * radius * (1.0 + 1e-12) {
            let idx: Vec<usize> =
                (0..dim).map(|a| (index[a] as isize + offset[a]) as usize).collect();
            out.push(u.node_at(&idx));
        }
        let mut a = dim;
        loop {
            if a == 0 {
                return Ok(out);
            }
            a -= 1;
            if offset[a] < reach[a] as isize {
                offset[a] += 1;
                break;
            }
            offset[a] = -(reach[a] as isize);
        }
    }
}

fn touching_gap(
    u: &ScalarField,
    q: &QuadraticPolynomial,
    node: usize,
    radius: f64,
    direction: Direction,
) -> Result<f64> {
    let nodes = neighbourhood(u, node, radius)?;
    let mut x = vec![0.0; u.dim()];
    let mut gap = f64::INFINITY;
    for k in nodes {
        u.coords_into(k, &mut x);
        gap = gap.min(direction.sign() * (q.eval(&x) - u.get(k)));
    }
    Ok(gap)
}

/// True iff q(p) = u(p) and q lies on the given side of u at every node within `radius`.
pub fn touches(
    u: &ScalarField,
    q: &QuadraticPolynomial,
    node: usize,
    radius: f64,
    direction: Direction,
) -> Result<bool> {
    if q.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: q.dim() });
    }
    let p = u.coords(node);
    if (q.eval(&p) - u.get(node)).abs() > TOUCH_TOLERANCE {
        neighbourhood(u, node, radius)?;
        return Ok(false);
    }
    Ok(touching_gap(u, q, node, radius, direction)? >= -TOUCH_TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub trials: usize,
    pub radius_cells: usize,
    pub bump_norm: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { trials: 100, radius_cells: DEFAULT_RADIUS_CELLS, bump_norm: DEFAULT_BUMP_NORM, seed: 0 }
    }
}

impl ProbeConfig {
    pub fn radius(&self, u: &ScalarField) -> f64 {
        self.radius_cells as f64 * u.max_spacing()
    }
}

/// Random quadratics centred on the discrete second-order data at `node`:
/// q = u(p) + ∇ₕu·(x − p) + ½(x − p)ᵀ(D²ₕu + S)(x − p).
///
/// Trial 0 uses S = 0. Odd trials draw S = ±(P + εI) with P PSD (sign chosen so
/// that touching from `direction` is likely), even trials a general symmetric S.
/// In every case ‖S‖ ≤ `bump_norm`.
fn probe(
    u: &ScalarField,
    node: usize,
    config: &ProbeConfig,
    direction: Direction,
) -> Result<Vec<TouchingReport>> {
    let radius = config.radius(u);
    neighbourhood(u, node, radius)?;
    let p = u.coords(node);
    let value = u.get(node);
    let grad = u.gradient(node)?;
    let d2 = u.real_hessian(node)?;
    let identity = SymMatrix::identity(u.dim());
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = sample::stream_rng(config.seed, trial as u64);
            let bump = if trial == 0 {
                SymMatrix::zeros(u.dim())
            } else if trial % 2 == 1 {
                let floor = 0.5 * config.bump_norm * rng.random::<f64>();
                let p = sample::psd(&mut rng, u.dim(), 0.5 * config.bump_norm);
                (&p + &SymMatrix::scaled_identity(u.dim(), floor)).scale(direction.sign())
            } else {
                sample::symmetric(&mut rng, u.dim(), config.bump_norm)
            };
            let q = QuadraticPolynomial::centered(&p, value, &grad, &d2 + &bump)?;
            let gap = touching_gap(u, &q, node, radius, direction)?;
            let op = eval_f(&(&q.hessian - &identity));
            Ok(TouchingReport {
                point: node,
                direction,
                polynomial: q,
                gap,
                operator_value: op.value,
                branch: op.branch,
                seed: config.seed,
                trial,
            })
        })
        .collect()
}

/// Quadratics touching from above must satisfy F(D²q − I) ≥ −1e−8.
pub fn subsolution_probe(u: &ScalarField, node: usize, config: &ProbeConfig) -> Result<Vec<TouchingReport>> {
    probe(u, node, config, Direction::Above)
}

/// Quadratics touching from below in the regular branch must satisfy F(D²q − I) ≤ 1e−8.
pub fn supersolution_probe(u: &ScalarField, node: usize, config: &ProbeConfig) -> Result<Vec<TouchingReport>> {
    probe(u, node, config, Direction::Below)
}

pub fn violations(reports: &[TouchingReport]) -> Vec<&TouchingReport> {
    reports.iter().filter(|r| r.is_violation()).collect()
}

pub fn blocki_value(z: Complex64, w: Complex64) -> f64 {
    z.norm() * (1.0 + w.norm_sqr())
}

/// The Blocki function in real coordinates (x₁, x₂, y₁, y₂), z = x₁ + iy₁, w = x₂ + iy₂.
pub fn blocki_real(x: &[f64]) -> f64 {
    blocki_value(Complex64::new(x[0], x[2]), Complex64::new(x[1], x[3]))
}

/// det(2u_{jk̄}) of the Blocki function from closed-form derivatives:
/// u_{zz̄} = (1 + |w|²)/(4|z|), u_{ww̄} = |z|, u_{zw̄} = z̄w/(2|z|).
pub fn blocki_det_check(z: Complex64, w: Complex64) -> Result<f64> {
    let r = z.norm();
    if r < BLOCKI_SINGULAR_MARGIN {
        return Err(Error::TooCloseToSingularSet { modulus: r });
    }
    let a = (1.0 + w.norm_sqr()) / (2.0 * r);
    let d = 2.0 * r;
    let b = z.conj() * w / r;
    Ok(a * d - b.norm_sqr())
}

/// det(2u_{jk̄}) from centred second differences of the Blocki function with step `h`.
pub fn blocki_det_fd(z: Complex64, w: Complex64, h: f64) -> Result<f64> {
    let r = z.norm();
    if r < BLOCKI_SINGULAR_MARGIN {
        return Err(Error::TooCloseToSingularSet { modulus: r });
    }
    let p = [z.re, w.re, z.im, w.im];
    let shifted = |a: usize, sa: f64, b: usize, sb: f64| {
        let mut x = p;
        x[a] += sa * h;
        x[b] += sb * h;
        blocki_real(&x)
    };
    let c = blocki_real(&p);
    let d2 = SymMatrix::from_fn(4, |a, b| {
        if a == b {
            (shifted(a, 1.0, a, 0.0) - 2.0 * c + shifted(a, -1.0, a, 0.0)) / (h * h)
        } else {
            (shifted(a, 1.0, b, 1.0) - shifted(a, 1.0, b, -1.0) - shifted(a, -1.0, b, 1.0)
                + shifted(a, -1.0, b, -1.0))
                / (4.0 * h * h)
        }
    });
    Ok(complex_hessian_from_real(&d2).determinant())
}

/// Smallest eigenvalue of 2u_{jk̄} for the Blocki function.
///
/// F(D²q − I) is in its regular branch only when this exceeds ½, so the
/// viscosity probes are meaningful at points where it does.
pub fn blocki_min_complex_eigenvalue(z: Complex64, w: Complex64) -> f64 {
    let r = z.norm();
    let a = (1.0 + w.norm_sqr()) / (2.0 * r);
    let d = 2.0 * r;
    let b = z.conj() * w / r;
    let half_trace = 0.5 * (a + d);
    half_trace - (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt()
}

/// [u(h, w) − 2u(0, w) + u(−h, w)]/h² along Re z, equal to 2(1 + |w|²)/h.
pub fn c2_blowup_probe(h: f64, w: Complex64) -> f64 {
    let plus = blocki_value(Complex64::new(h, 0.0), w);
    let zero = blocki_value(Complex64::new(0.0, 0.0), w);
    let minus = blocki_value(Complex64::new(-h, 0.0), w);
    (plus - 2.0 * zero + minus) / (h * h)
}

/// u(t, t)/t³ = (1 + t²)/t².
pub fn blocki_growth_probe(t: f64) -> f64 {
    let z = Complex64::new(t, 0.0);
    blocki_value(z, z) / (t * t * t)
}

/// The Blocki function sampled on a small box centred at (z, w).
pub fn blocki_field(z: Complex64, w: Complex64, points_per_axis: usize, halfwidth: f64) -> Result<ScalarField> {
    let center = vec![z.re, w.re, z.im, w.im];
    let field = ScalarField::new(2, points_per_axis, center, vec![halfwidth; 4])?;
    Ok(field.sample(blocki_real))
}
