//! Dirichlet solver for det(2u_{z_j z̄_k}) = f on boxes in ℝ²ⁿ.
//!
//! The equation is discretized with centered second differences (4-point cross
//! stencils for mixed derivatives) and solved in log form
//!
//! ```text
//! G(u) = log det(2u_{z_j z̄_k,h}) − log f = ½ log det S(u) − log f,   S(u) = ½(D²ₕu + JᵀD²ₕu J),
//! ```
//!
//! by damped Newton. The linearization dG(u)[δ] = ½ tr(S⁻¹ D²ₕδ) is a
//! non-divergence elliptic operator whenever the iterate is plurisubharmonic; it
//! is assembled exactly (not by differencing G) and solved with ILU(0)
//! preconditioned GMRES.
//!
//! The scheme is consistent but not monotone, so the discrete comparison
//! principle is only checked up to an O(h²) slack.

mod boundary;
mod comparison;
pub mod sparse;

use rayon::prelude::*;

pub use boundary::BoundaryProfile;
pub use comparison::{
    comparison_check, comparison_check_with_slack, comparison_suite, random_ordered_pair, ComparisonRow,
    ComparisonReport, COMPARISON_SLACK_FACTOR,
};

use crate::error::{Error, Result};
use crate::linalg::{format_f64, j_project, HermitianMatrix, ScalarField, SymMatrix};
use sparse::{conjugate_gradient, gmres, CsrMatrix, Ilu0, LinearSolveReport};


/// Right-hand side f of det(2u_{z_j z̄_k}) = f.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Constant(f64),
    /// One value per grid node (boundary entries are ignored).
    Field(Vec<f64>),
}

impl Rhs {
    #[inline]
    pub fn at(&self, node: usize) -> f64 {
        match self {
            Self::Constant(f) => *f,
            Self::Field(v) => v[node],
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        let ok = |f: f64| f > 0.0 && f.is_finite();
        match self {
            Self::Constant(f) if ok(*f) => Ok(()),
            Self::Field(v) if v.len() == len && v.iter().all(|&f| ok(f)) => Ok(()),
            _ => Err(Error::InvalidProblem(
                "right-hand side must be positive and cover the grid".into(),
            )),
        }
    }
}

/// det(2u_{z_j z̄_k}) = f on [−L, L]²ⁿ with u = g on the boundary.
///
/// The boundary data is |x|²/2 + perturbation(R·x)/R² where R is
/// `boundary_scale`; R = 1 gives the profile itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletProblem {
    pub n: usize,
    pub points_per_axis: usize,
    pub halfwidth: f64,
    pub rhs: Rhs,
    pub boundary: BoundaryProfile,
    pub boundary_scale: f64,
}

impl DirichletProblem {
    pub fn new(n: usize, points_per_axis: usize, halfwidth: f64, boundary: BoundaryProfile) -> Self {
        Self {
            n,
            points_per_axis,
            halfwidth,
            rhs: Rhs::Constant(1.0),
            boundary,
            boundary_scale: 1.0,
        }
    }

    pub fn with_rhs(mut self, rhs: Rhs) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn with_boundary_scale(mut self, scale: f64) -> Self {
        self.boundary_scale = scale;
        self
    }

    pub fn grid(&self) -> Result<ScalarField> {
        ScalarField::cube(self.n, self.points_per_axis, self.halfwidth)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.n) {
            return Err(Error::InvalidProblem(format!(
                "complex dimension must be 1 or 2, got {}",
                self.n
            )));
        }
        if !(self.boundary_scale > 0.0 && self.boundary_scale.is_finite()) {
            return Err(Error::InvalidProblem("boundary scale must be positive".into()));
        }
        self.boundary.validate()?;
        let grid = self.grid()?;
        self.rhs.validate(grid.len())
    }

    pub fn boundary_value(&self, x: &[f64]) -> f64 {
        self.boundary.rescaled_value(x, self.boundary_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Max-norm residual target.
    pub tolerance: f64,
    pub max_iter: usize,
    /// The line search gives up below a step of 2^-min_step_exponent.
    pub min_step_exponent: u32,
    /// Smallest complex-Hessian eigenvalue an accepted iterate may have.
    pub psh_floor: f64,
    pub linear_tolerance: f64,
    pub gmres_restart: usize,
    pub max_linear_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iter: 50,
            min_step_exponent: 30,
            psh_floor: 1e-8,
            linear_tolerance: 1e-12,
            gmres_restart: 80,
            max_linear_iterations: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub min_complex_eigen: f64,
    pub damping_events: usize,
    pub linear_iterations: usize,
}

impl SolveReport {
    pub const CSV_HEADER: &'static str =
        "iterations,final_residual,min_complex_eigen,damping_events,linear_iterations";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.iterations,
            format_f64(self.final_residual),
            format_f64(self.min_complex_eigen),
            self.damping_events,
            self.linear_iterations
        )
    }
}

/// Pointwise residual of the log-determinant equation.
#[derive(Debug, Clone)]
pub struct Residual {
    /// log det(2u_h) − log f at interior nodes, 0 on the boundary, NaN where not PSH.
    pub field: ScalarField,
    /// Max over interior nodes of |G|; infinite when some node is not PSH.
    pub max_abs: f64,
    /// Smallest eigenvalue of the discrete complex Hessian over the interior.
    pub min_eigen: f64,
    /// Interior nodes whose discrete complex Hessian is not positive definite.
    pub non_psh_nodes: Vec<usize>,
}

impl Residual {
    pub fn not_psh_error(&self) -> Option<Error> {
        (!self.non_psh_nodes.is_empty()).then(|| Error::NotPsh {
            count: self.non_psh_nodes.len(),
        })
    }
}

/// J-projected discrete Hessian S = ι(conj 2u_{z_j z̄_k}) at an interior node.
fn projected_hessian(u: &ScalarField, node: usize) -> SymMatrix {
    j_project(&u.real_hessian(node).expect("interior node"))
}

pub fn residual(u: &ScalarField, rhs: &Rhs) -> Residual {
    let evals: Vec<(usize, f64, f64)> = u
        .interior_nodes()
        .into_par_iter()
        .map(|node| {
            let ev = projected_hessian(u, node).eigenvalues();
            let min = ev[0];
            let g = if min > 0.0 {
                0.5 * ev.iter().map(|l| l.ln()).sum::<f64>() - rhs.at(node).ln()
            } else {
                f64::NAN
            };
            (node, g, min)
        })
        .collect();
    let mut values = vec![0.0; u.len()];
    let mut max_abs = 0.0_f64;
    let mut min_eigen = f64::INFINITY;
    let mut non_psh_nodes = Vec::new();
    for (node, g, min) in evals {
        values[node] = g;
        min_eigen = min_eigen.min(min);
        if g.is_nan() {
            non_psh_nodes.push(node);
            max_abs = f64::INFINITY;
        } else {
            max_abs = max_abs.max(g.abs());
        }
    }
    Residual {
        field: u.with_values(values).expect("same grid"),
        max_abs,
        min_eigen,
        non_psh_nodes,
    }
}

/// Interior numbering: flat node index -> unknown index (usize::MAX on the boundary).
fn interior_numbering(u: &ScalarField) -> (Vec<usize>, Vec<usize>) {
    let interior = u.interior_nodes();
    let mut unknown_of = vec![usize::MAX; u.len()];
    for (k, &node) in interior.iter().enumerate() {
        unknown_of[node] = k;
    }
    (interior, unknown_of)
}

/// Row of Σ_ab C_ab (D²ₕδ)_ab restricted to interior unknowns.
fn stencil_row(u: &ScalarField, node: usize, coeff: &SymMatrix, unknown_of: &[usize]) -> Vec<(usize, f64)> {
    let d = u.dim();
    let mut row = Vec::with_capacity(1 + 2 * d + 2 * d * (d - 1));
    let mut push = |target: usize, v: f64| {
        let k = unknown_of[target];
        if k != usize::MAX {
            row.push((k, v));
        }
    };
    let mut center = 0.0;
    for a in 0..d {
        let sa = u.stride(a);
        let ha = u.spacing(a);
        let c = coeff.get(a, a) / (ha * ha);
        center -= 2.0 * c;
        push(node + sa, c);
        push(node - sa, c);
        for b in (a + 1)..d {
            let sb = u.stride(b);
            let k = coeff.get(a, b) / (2.0 * ha * u.spacing(b));
            push(node + sa + sb, k);
            push(node + sa - sb, -k);
            push(node - sa + sb, -k);
            push(node - sa - sb, k);
        }
    }
    push(node, center);
    row
}

/// Jacobian of G at `u` over the interior unknowns, with the residual vector.
pub fn linearization(u: &ScalarField, rhs: &Rhs) -> Result<(CsrMatrix, Vec<f64>)> {
    let (interior, unknown_of) = interior_numbering(u);
    let rows: Vec<(Vec<(usize, f64)>, f64, f64)> = interior
        .par_iter()
        .map(|&node| {
            let s = projected_hessian(u, node);
            let (values, vectors) = s.eigen();
            let min = values[0];
            if min <= 0.0 {
                return (Vec::new(), f64::NAN, min);
            }
            let dim = s.dim();
            // C = ½ S⁻¹
            let coeff = SymMatrix::from_fn(dim, |i, j| {
                0.5 * (0..dim)
                    .map(|k| vectors[(i, k)] * vectors[(j, k)] / values[k])
                    .sum::<f64>()
            });
            let g = 0.5 * values.iter().map(|l| l.ln()).sum::<f64>() - rhs.at(node).ln();
            (stencil_row(u, node, &coeff, &unknown_of), g, min)
        })
        .collect();
    let bad = rows.iter().filter(|r| r.2 <= 0.0).count();
    if bad > 0 {
        return Err(Error::NotPsh { count: bad });
    }
    let mut g = Vec::with_capacity(rows.len());
    let mut matrix_rows = Vec::with_capacity(rows.len());
    for (row, gv, _) in rows {
        matrix_rows.push(row);
        g.push(gv);
    }
    Ok((CsrMatrix::from_rows(matrix_rows), g))
}

/// Solves A δ = −G(u) for the Newton correction (zero on the boundary).
pub fn newton_step(u: &ScalarField, rhs: &Rhs, opts: &SolveOptions) -> Result<(ScalarField, LinearSolveReport)> {
    let (a, g) = linearization(u, rhs)?;
    let b: Vec<f64> = g.iter().map(|v| -v).collect();
    let ilu = Ilu0::new(&a);
    let (x, report) = gmres(
        &a,
        &b,
        ilu.as_ref(),
        opts.linear_tolerance,
        opts.gmres_restart,
        opts.max_linear_iterations,
    );
    if !report.converged || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolveDiverged {
            iterations: report.iterations,
            relative_residual: report.relative_residual,
        });
    }
    let mut delta = vec![0.0; u.len()];
    for (node, v) in u.interior_nodes().into_iter().zip(x) {
        delta[node] = v;
    }
    Ok((u.with_values(delta)?, report))
}

/// Discrete harmonic function on the grid with the given boundary values.
pub fn harmonic_extension(boundary: &ScalarField) -> Result<ScalarField> {
    let (interior, unknown_of) = interior_numbering(boundary);
    let d = boundary.dim();
    let rows_and_rhs: Vec<(Vec<(usize, f64)>, f64)> = interior
        .par_iter()
        .map(|&node| {
            let mut row = Vec::with_capacity(2 * d + 1);
            let mut rhs = 0.0;
            let mut diag = 0.0;
            for a in 0..d {
                let w = 1.0 / (boundary.spacing(a) * boundary.spacing(a));
                diag += 2.0 * w;
                for nb in [node + boundary.stride(a), node - boundary.stride(a)] {
                    match unknown_of[nb] {
                        usize::MAX => rhs += w * boundary.get(nb),
                        k => row.push((k, -w)),
                    }
                }
            }
            row.push((unknown_of[node], diag));
            (row, rhs)
        })
        .collect();
    let (rows, rhs): (Vec<_>, Vec<_>) = rows_and_rhs.into_iter().unzip();
    let a = CsrMatrix::from_rows(rows);
    let (x, report) = conjugate_gradient(&a, &rhs, 1e-14, 20 * interior.len() + 100);
    if !report.converged && report.relative_residual > 1e-10 {
        return Err(Error::LinearSolveDiverged {
            iterations: report.iterations,
            relative_residual: report.relative_residual,
        });
    }
    let mut values = boundary.values().to_vec();
    for (&node, v) in interior.iter().zip(x) {
        values[node] = v;
    }
    boundary.with_values(values)
}

/// u⁰ = |x|²/2 + discrete harmonic extension of g − |x|²/2; equal to g on the boundary.
pub fn initial_iterate(problem: &DirichletProblem) -> Result<ScalarField> {
    let grid = problem.grid()?;
    let mut excess = vec![0.0; grid.len()];
    let mut x = vec![0.0; grid.dim()];
    for node in grid.boundary_nodes() {
        grid.coords_into(node, &mut x);
        excess[node] = problem.boundary.rescaled_perturbation(&x, problem.boundary_scale);
    }
    let ext = harmonic_extension(&grid.with_values(excess)?)?;
    let mut values = ext.into_values();
    for (node, v) in values.iter_mut().enumerate() {
        grid.coords_into(node, &mut x);
        if grid.is_interior(node) {
            *v += 0.5 * x.iter().map(|t| t * t).sum::<f64>();
        } else {
            *v = problem.boundary_value(&x);
        }
    }
    grid.with_values(values)
}

fn axpy_field(u: &ScalarField, t: f64, delta: &ScalarField) -> ScalarField {
    let values = u.values().iter().zip(delta.values()).map(|(a, b)| a + t * b).collect();
    u.with_values(values).expect("same grid")
}

/// Damped Newton solve. Boundary values equal the data exactly.
pub fn solve_dirichlet(problem: &DirichletProblem, opts: &SolveOptions) -> Result<(ScalarField, SolveReport)> {
    problem.validate()?;
    let mut u = initial_iterate(problem)?;
    let rhs = &problem.rhs;
    let mut res = residual(&u, rhs);
    if res.min_eigen < opts.psh_floor {
        return Err(Error::NotPshInitial {
            min_eigen: res.min_eigen,
        });
    }
    let mut report = SolveReport {
        iterations: 0,
        final_residual: res.max_abs,
        min_complex_eigen: res.min_eigen,
        damping_events: 0,
        linear_iterations: 0,
    };
    while res.max_abs > opts.tolerance {
        if report.iterations >= opts.max_iter {
            return Err(Error::MaxIterations(opts.max_iter));
        }
        let (delta, lin) = newton_step(&u, rhs, opts)?;
        report.linear_iterations += lin.iterations;
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial = axpy_field(&u, t, &delta);
            let trial_res = residual(&trial, rhs);
            if trial_res.min_eigen >= opts.psh_floor && trial_res.max_abs < res.max_abs {
                u = trial;
                res = trial_res;
                break;
            }
            halvings += 1;
            report.damping_events += 1;
            if halvings > opts.min_step_exponent {
                return Err(Error::NewtonStalled {
                    iteration: report.iterations,
                    min_exponent: opts.min_step_exponent,
                });
            }
            t *= 0.5;
        }
        report.iterations += 1;
        log_iteration(report.iterations, t, res.max_abs);
    }
    report.final_residual = res.max_abs;
    report.min_complex_eigen = res.min_eigen;
    Ok((u, report))
}

fn log_iteration(iteration: usize, step: f64, residual: f64) {
    if std::env::var_os("CMALAB_TRACE").is_some() {
        eprintln!("newton {iteration:>3}: step {step:.3e} residual {residual:.3e}");
    }
}

/// Centered real and complex Hessians at the box center.
pub fn hessian_at_center(u: &ScalarField) -> Result<(SymMatrix, HermitianMatrix)> {
    let node = u.center_node();
    Ok((u.real_hessian(node)?, u.complex_hessian(node)?))
}

/// Richardson combination (4·D²ₕ − D²₂ₕ)/3 of the center Hessian.
pub fn richardson_hessian_at_center(u: &ScalarField) -> Result<SymMatrix> {
    let node = u.center_node();
    let fine = u.real_hessian_with_step(node, 1)?;
    let coarse = u.real_hessian_with_step(node, 2)?;
    Ok(&fine.scale(4.0 / 3.0) - &coarse.scale(1.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm_sq(x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn max_diff(u: &ScalarField, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..u.len())
            .map(|k| (u.get(k) - f(&u.coords(k))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn residual_examples() {
        for n in 1..=2 {
            let grid = ScalarField::cube(n, 7, 1.0).unwrap();
            let u = grid.clone().sample(half_norm_sq);
            let r = residual(&u, &Rhs::Constant(1.0));
            assert!(r.max_abs < 1e-12);
            let r = residual(&u, &Rhs::Constant(2.0));
            for node in u.interior_nodes() {
                assert!((r.field.get(node) + 2f64.ln()).abs() < 1e-12);
            }
            let u2 = grid.sample(|x| 2.0 * half_norm_sq(x));
            let r = residual(&u2, &Rhs::Constant(1.0));
            for node in u2.interior_nodes() {
                assert!((r.field.get(node) - (n as f64) * 2f64.ln()).abs() < 1e-12);
            }
            assert!(u2.boundary_nodes().iter().all(|&k| r.field.get(k) == 0.0));
        }
    }

    #[test]
    fn residual_flags_non_psh_nodes() {
        let u = ScalarField::cube(1, 5, 1.0).unwrap().sample(|x| -half_norm_sq(x));
        let r = residual(&u, &Rhs::Constant(1.0));
        assert_eq!(r.non_psh_nodes.len(), 9);
        assert!(matches!(r.not_psh_error(), Some(Error::NotPsh { count: 9 })));
    }

    #[test]
    fn newton_step_vanishes_at_solution() {
        let u = ScalarField::cube(2, 7, 1.0).unwrap().sample(|x| half_norm_sq(x) + 0.3 * x[0]);
        let (delta, _) = newton_step(&u, &Rhs::Constant(1.0), &SolveOptions::default()).unwrap();
        assert!(delta.values().iter().all(|v| v.abs() <= 1e-11));
    }

    #[test]
    fn linearization_matches_directional_derivative() {
        // dG(u)[δ] ≈ (G(u + tδ) − G(u)) / t with error O(t)
        let base = ScalarField::cube(2, 7, 1.0)
            .unwrap()
            .sample(|x| half_norm_sq(x) + 0.05 * (x[0] * x[2]).sin() + 0.03 * x[1].powi(4));
        let rhs = Rhs::Constant(1.0);
        let (a, g0) = linearization(&base, &rhs).unwrap();
        let interior = base.interior_nodes();
        let dir: Vec<f64> = (0..base.len())
            .map(|k| {
                if base.is_interior(k) {
                    let x = base.coords(k);
                    x.iter().map(|v| 1.0 - v * v).product::<f64>() * (x[1] + 0.5)
                } else {
                    0.0
                }
            })
            .collect();
        let dir_int: Vec<f64> = interior.iter().map(|&k| dir[k]).collect();
        let lin = a.mul_vec(&dir_int);
        let mut errs = Vec::new();
        for t in [1e-3, 1e-4] {
            let shifted = axpy_field(&base, t, &base.with_values(dir.clone()).unwrap());
            let r = residual(&shifted, &rhs);
            let err = interior
                .iter()
                .enumerate()
                .map(|(i, &k)| ((r.field.get(k) - g0[i]) / t - lin[i]).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        // first-order convergence of the difference quotient
        assert!(errs[1] < errs[0] / 5.0, "{errs:?}");
        assert!(errs[1] < 1e-3);
    }

    #[test]
    fn newton_converges_quadratically() {
        // n = 1, u = |x|²/2 + ε·bump: one step shrinks the residual like ε²
        let rhs = Rhs::Constant(1.0);
        let bump = |x: &[f64]| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]);
        let mut ratios = Vec::new();
        for eps in [1e-2, 1e-3] {
            let u = ScalarField::cube(1, 17, 1.0)
                .unwrap()
                .sample(|x| half_norm_sq(x) + eps * bump(x));
            let r0 = residual(&u, &rhs).max_abs;
            let (delta, _) = newton_step(&u, &rhs, &SolveOptions::default()).unwrap();
            let r1 = residual(&axpy_field(&u, 1.0, &delta), &rhs).max_abs;
            ratios.push(r1 / (r0 * r0));
            assert!(r1 < r0 * 10.0 * eps);
        }
        assert!(ratios[0] < 10.0 && ratios[1] < 10.0, "{ratios:?}");
    }

    #[test]
    fn harmonic_extension_reproduces_harmonic_quadratics() {
        let g = ScalarField::cube(2, 7, 1.0)
            .unwrap()
            .sample(|x| x[0] * x[0] - x[3] * x[3] + 0.5 * x[1] * x[2] + x[0]);
        let mut boundary_only = g.clone();
        for node in g.interior_nodes() {
            boundary_only.values_mut()[node] = 0.0;
        }
        let h = harmonic_extension(&boundary_only).unwrap();
        let err = (0..g.len()).map(|k| (g.get(k) - h.get(k)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn solve_recovers_quadratic_n1() {
        let problem = DirichletProblem::new(1, 33, 1.0, BoundaryProfile::QuadraticBase);
        let (u, rep) = solve_dirichlet(&problem, &SolveOptions::default()).unwrap();
        assert!(max_diff(&u, half_norm_sq) < 1e-10);
        assert!(rep.final_residual <= 1e-10);
        assert!(rep.iterations <= 5);
    }

    #[test]
    fn solve_recovers_pluriharmonic_shift_n2() {
        let problem = DirichletProblem::new(2, 9, 1.0, BoundaryProfile::Linear { a: 0.3, b: 0.1 });
        let (u, rep) = solve_dirichlet(&problem, &SolveOptions::default()).unwrap();
        let exact = |x: &[f64]| BoundaryProfile::Linear { a: 0.3, b: 0.1 }.value(x);
        assert!(max_diff(&u, exact) < 1e-9);
        assert!(rep.iterations <= 5);
    }

    #[test]
    fn solve_nontrivial_profile_n2() {
        let problem = DirichletProblem::new(2, 9, 1.0, BoundaryProfile::Power { c: 0.1, alpha: 1.5 });
        let (u, rep) = solve_dirichlet(&problem, &SolveOptions::default()).unwrap();
        assert!(rep.final_residual <= 1e-10);
        assert!(rep.min_complex_eigen > 0.0);
        let r = residual(&u, &problem.rhs);
        assert!(r.max_abs <= 1e-10);
        // boundary matches exactly
        for node in u.boundary_nodes() {
            assert_eq!(u.get(node), problem.boundary_value(&u.coords(node)));
        }
    }

    #[test]
    fn invalid_problems_rejected() {
        let p = DirichletProblem::new(3, 5, 1.0, BoundaryProfile::QuadraticBase);
        assert!(solve_dirichlet(&p, &SolveOptions::default()).is_err());
        let p = DirichletProblem::new(1, 5, 1.0, BoundaryProfile::QuadraticBase).with_rhs(Rhs::Constant(0.0));
        assert!(solve_dirichlet(&p, &SolveOptions::default()).is_err());
    }

    #[test]
    fn non_psh_initial_iterate_rejected() {
        // strongly concave boundary data gives a non-PSH harmonic start
        let p = DirichletProblem::new(2, 7, 1.0, BoundaryProfile::QuadraticExcess { c: -5.0 });
        let err = solve_dirichlet(&p, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotPshInitial { .. }), "{err:?}");
    }

    #[test]
    fn comparison_examples() {
        let grid = ScalarField::cube(1, 9, 1.0).unwrap();
        let u1 = grid.clone().sample(half_norm_sq);
        let u2 = grid.clone().sample(|x| half_norm_sq(x) + 0.25);
        let rep = comparison_check(&u1, &u2).unwrap();
        assert_eq!(rep.interior_gap, 0.25);
        assert_eq!(rep.boundary_gap, 0.25);
        assert!(rep.holds());
        let u3 = grid.sample(|x| half_norm_sq(x) + 0.2 * x[0] - 0.1 * x[1]);
        let rep = comparison_check(&u1, &u3).unwrap();
        assert!(rep.interior_gap <= rep.boundary_gap);
        let other = ScalarField::cube(1, 7, 1.0).unwrap();
        assert_eq!(comparison_check(&u1, &other).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn center_hessian_examples() {
        let grid = ScalarField::cube(2, 5, 1.0).unwrap();
        let (real, cplx) = hessian_at_center(&grid.clone().sample(|x| half_norm_sq(x) + 0.3 * x[0])).unwrap();
        assert!((&real - &SymMatrix::identity(4)).max_abs() < 1e-13);
        assert!(cplx.max_abs_diff(&HermitianMatrix::identity(2)) < 1e-13);
        let (real, _) = hessian_at_center(&grid.clone().sample(|x| half_norm_sq(x) + 0.01 * x[0] * x[0])).unwrap();
        let mut expected = SymMatrix::identity(4);
        expected.set(0, 0, 1.02);
        assert!((&real - &expected).max_abs() < 1e-13);
        let rich = richardson_hessian_at_center(&grid.sample(|x| half_norm_sq(x) + x[1].powi(4))).unwrap();
        // Richardson removes the h² term of the quartic
        assert!((rich.get(1, 1) - 1.0).abs() < 1e-12);
    }
}
