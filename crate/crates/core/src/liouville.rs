//! Rescaling ladder and the Ricci-flat log-det diagnostic.
//!
//! For a solution u on ℝ²ⁿ with boundary growth |x|²/2 + o(|x|²), the blow-down
//! w_R(x) = u(Rx)/R² − |x|²/2 should flatten as R grows and D²u(0) should approach I.
//! Each rung poses the rescaled problem directly on the unit box with boundary
//! data g(Rx)/R², solves it, and records sup|w_R| and ‖D²u(0) − I‖.
//!
//! A handful of rungs only illustrates decay for one concrete profile; it is not
//! evidence about the asymptotic statement in general.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{format_f64, ScalarField, SymMatrix};
use crate::solver::{
    hessian_at_center, richardson_hessian_at_center, solve_dirichlet, BoundaryProfile,
    DirichletProblem, SolveOptions,
};

/// The problem solved at rung R: unit box, f = 1, data |x|²/2 + perturbation(Rx)/R².
pub fn rescaled_problem(
    profile: BoundaryProfile,
    scale: f64,
    n: usize,
    points_per_axis: usize,
) -> Result<DirichletProblem> {
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(Error::InvalidProblem(format!("rescaling factor must be >= 1, got {scale}")));
    }
    let problem = DirichletProblem::new(n, points_per_axis, 1.0, profile).with_boundary_scale(scale);
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOptions {
    pub n: usize,
    pub points_per_axis: usize,
    /// Use (4D²ₕ − D²₂ₕ)/3 at the centre instead of D²ₕ. On symmetric profiles the
    /// discrete equation pins D²ₕu(0) to exactly I, so the plain gap is rounding noise.
    pub richardson: bool,
    pub solve: SolveOptions,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self { n: 2, points_per_axis: 13, richardson: true, solve: SolveOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RungMeasurement {
    /// max over nodes of |u − |x|²/2|.
    pub sup_w: f64,
    /// ‖D²u(0) − I‖, spectral norm.
    pub hessian_gap: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub scale: f64,
    pub h: f64,
    pub outcome: std::result::Result<RungMeasurement, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub profile: BoundaryProfile,
    pub options: LadderOptions,
    /// Ordered by increasing R.
    pub rows: Vec<LadderRow>,
    /// −slope of the least-squares line through (log R, log hessian_gap).
    pub decay_exponent: Option<f64>,
}

impl LadderReport {
    pub const CSV_HEADER: &'static str = "R,sup_wR,hessian_gap,iters,residual,h,status";

    pub fn measurements(&self) -> Vec<(f64, RungMeasurement)> {
        self.rows
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.scale, *m)))
            .collect()
    }

    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.is_ok())
    }

    pub fn gap_strictly_decreasing(&self) -> bool {
        self.all_succeeded()
            && self.measurements().windows(2).all(|w| w[1].1.hessian_gap < w[0].1.hessian_gap)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# profile: {}", self.profile).unwrap();
        writeln!(
            out,
            "# n: {}, points_per_axis: {}, richardson: {}",
            self.options.n, self.options.points_per_axis, self.options.richardson
        )
        .unwrap();
        match self.decay_exponent {
            Some(p) => writeln!(out, "# fitted decay exponent: {}", format_f64(p)).unwrap(),
            None => writeln!(out, "# fitted decay exponent: none").unwrap(),
        }
        writeln!(out, "# finite ladder: illustrates decay for this profile only, not a proof").unwrap();
        writeln!(out, "{}", Self::CSV_HEADER).unwrap();
        for row in &self.rows {
            match &row.outcome {
                Ok(m) => writeln!(
                    out,
                    "{},{},{},{},{},{},ok",
                    format_f64(row.scale),
                    format_f64(m.sup_w),
                    format_f64(m.hessian_gap),
                    m.iterations,
                    format_f64(m.residual),
                    format_f64(row.h)
                )
                .unwrap(),
                Err(e) => writeln!(
                    out,
                    "{},nan,nan,0,nan,{},{}",
                    format_f64(row.scale),
                    format_f64(row.h),
                    e.to_string().replace(',', ";")
                )
                .unwrap(),
            }
        }
        out
    }
}

/// Least-squares slope of log y against log x, negated.
pub fn fit_decay_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

fn measure(u: &ScalarField, richardson: bool) -> Result<(f64, f64)> {
    let sup_w = (0..u.len())
        .map(|k| {
            let x = u.coords(k);
            (u.get(k) - 0.5 * x.iter().map(|v| v * v).sum::<f64>()).abs()
        })
        .fold(0.0, f64::max);
    let d2 = if richardson { richardson_hessian_at_center(u)? } else { hessian_at_center(u)?.0 };
    let gap = (&d2 - &SymMatrix::identity(u.dim())).spectral_norm();
    Ok((sup_w, gap))
}

fn run_rung(profile: BoundaryProfile, scale: f64, options: &LadderOptions) -> Result<RungMeasurement> {
    let problem = rescaled_problem(profile, scale, options.n, options.points_per_axis)?;
    let (u, report) = solve_dirichlet(&problem, &options.solve)?;
    let (sup_w, hessian_gap) = measure(&u, options.richardson)?;
    Ok(RungMeasurement { sup_w, hessian_gap, iterations: report.iterations, residual: report.final_residual })
}

/// Solves every rung concurrently. Solver failures are recorded per row.
pub fn run_ladder(profile: BoundaryProfile, scales: &[f64], options: &LadderOptions) -> Result<LadderReport> {
    if scales.is_empty() {
        return Err(Error::InvalidProblem("empty ladder".into()));
    }
    if scales.iter().any(|r| !(*r >= 1.0 && r.is_finite())) {
        return Err(Error::InvalidProblem("every rescaling factor must be >= 1".into()));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidProblem("rescaling factors must be strictly increasing".into()));
    }
    profile.validate()?;
    let h = 2.0 / (options.points_per_axis as f64 - 1.0);
    let rows: Vec<LadderRow> = scales
        .par_iter()
        .map(|&scale| LadderRow { scale, h, outcome: run_rung(profile, scale, options) })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.scale, m.hessian_gap)))
        .collect();
    let decay_exponent = fit_decay_exponent(&points);
    Ok(LadderReport { profile, options: *options, rows, decay_exponent })
}

/// sup of the boundary perturbation of the rung-R problem over the unit box, for
/// homogeneous profiles: |perturbation(corner)|·R^{degree−2}.
pub fn perturbation_bound(profile: &BoundaryProfile, n: usize, scale: f64) -> Option<f64> {
    let degree = profile.homogeneity_degree()?;
    let corner = vec![1.0; 2 * n];
    Some(profile.perturbation(&corner).abs() * scale.powf(degree - 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciReport {
    /// max |ΔₕL| over nodes at least two cells from the boundary.
    pub laplacian_sup: f64,
    /// max L − min L over interior nodes.
    pub oscillation: f64,
}

/// L = log det(φ_{z_j z̄_k}) at interior nodes, NaN elsewhere.
pub fn log_det_field(phi: &ScalarField) -> Result<ScalarField> {
    let n = phi.n();
    let shift = n as f64 * std::f64::consts::LN_2;
    let mut values = vec![f64::NAN; phi.len()];
    let mut bad = 0;
    for node in phi.interior_nodes() {
        let h2 = phi.complex_hessian(node)?;
        let ev = h2.eigenvalues();
        if ev.iter().any(|&l| l <= 0.0) {
            bad += 1;
            continue;
        }
        values[node] = ev.iter().map(|l| l.ln()).sum::<f64>() - shift;
    }
    if bad > 0 {
        return Err(Error::NotPsh { count: bad });
    }
    phi.with_values(values)
}

pub fn ricci_flat_check(phi: &ScalarField) -> Result<RicciReport> {
    let l = log_det_field(phi)?;
    let interior = phi.interior_nodes();
    let (lo, hi) = interior
        .iter()
        .map(|&k| l.get(k))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut laplacian_sup = 0.0_f64;
    for &node in &interior {
        if phi.cells_to_boundary(node) < 2 {
            continue;
        }
        let c = l.get(node);
        let lap: f64 = (0..phi.dim())
            .map(|a| {
                let s = phi.stride(a);
                let h = phi.spacing(a);
                (l.get(node + s) - 2.0 * c + l.get(node - s)) / (h * h)
            })
            .sum();
        laplacian_sup = laplacian_sup.max(lap.abs());
    }
    Ok(RicciReport { laplacian_sup, oscillation: hi - lo })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm_sq(x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn rescaled_problem_boundary_data() {
        let p = rescaled_problem(BoundaryProfile::Power { c: 0.1, alpha: 1.5 }, 4.0, 1, 9).unwrap();
        let x = [1.0, -0.5];
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let expected = half_norm_sq(&x) + 0.1 * 4.0_f64.powf(-0.5) * r.powf(1.5);
        assert!((p.boundary_value(&x) - expected).abs() < 1e-15);
        let q = rescaled_problem(BoundaryProfile::QuadraticExcess { c: 0.1 }, 8.0, 1, 9).unwrap();
        assert!((q.boundary_value(&x) - 0.6 * r * r).abs() < 1e-15);
        assert!(rescaled_problem(BoundaryProfile::QuadraticBase, 0.5, 1, 9).is_err());
    }

    #[test]
    fn linear_ladder_is_exact() {
        let options = LadderOptions { n: 1, points_per_axis: 17, ..Default::default() };
        let profile = BoundaryProfile::Linear { a: 0.3, b: 0.0 };
        let report = run_ladder(profile, &[1.0, 2.0, 4.0, 8.0], &options).unwrap();
        for (r, m) in report.measurements() {
            assert!((m.sup_w - 0.3 * 2.0_f64.sqrt() / r).abs() < 1e-10, "{r}: {}", m.sup_w);
            assert!(m.hessian_gap < 1e-8);
        }
        let bound = perturbation_bound(&profile, 1, 2.0).unwrap();
        assert!((bound - 0.3 * 2.0_f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ladder_rejects_bad_scales() {
        let o = LadderOptions::default();
        let p = BoundaryProfile::QuadraticBase;
        assert!(run_ladder(p, &[], &o).is_err());
        assert!(run_ladder(p, &[2.0, 1.0], &o).is_err());
        assert!(run_ladder(p, &[0.5, 1.0], &o).is_err());
    }

    #[test]
    fn decay_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&r: &f64| (r, 3.0 * r.powf(-0.7))).collect();
        assert!((fit_decay_exponent(&pts).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(fit_decay_exponent(&pts[..1]), None);
    }

    #[test]
    fn failed_rungs_are_flagged() {
        let options = LadderOptions {
            n: 2,
            points_per_axis: 7,
            solve: SolveOptions { max_iter: 0, ..Default::default() },
            ..Default::default()
        };
        let report = run_ladder(BoundaryProfile::Power { c: 0.1, alpha: 1.0 }, &[1.0, 2.0], &options).unwrap();
        assert!(!report.all_succeeded());
        let csv = report.to_csv();
        assert!(csv.lines().filter(|l| l.ends_with("ok")).count() < 2);
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }

    #[test]
    fn quadratic_potential_is_ricci_flat() {
        for n in [1, 2] {
            let m = if n == 1 { 17 } else { 7 };
            let phi = ScalarField::cube(n, m, 1.0).unwrap().sample(half_norm_sq);
            let r = ricci_flat_check(&phi).unwrap();
            assert!(r.oscillation <= 1e-12 && r.laplacian_sup <= 1e-12, "{r:?}");
            let l = log_det_field(&phi).unwrap();
            let c = l.get(phi.center_node());
            assert!((c + n as f64 * std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_shifts_log_det_only() {
        let phi = ScalarField::cube(1, 17, 1.0).unwrap().sample(|x| 3.0 * half_norm_sq(x));
        let r = ricci_flat_check(&phi).unwrap();
        assert!(r.oscillation <= 1e-12);
        let l = log_det_field(&phi).unwrap();
        assert!((l.get(phi.center_node()) - (3.0_f64.ln() - std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn sine_perturbation_is_detected() {
        let phi = ScalarField::cube(1, 33, 1.0).unwrap().sample(|x| half_norm_sq(x) + 0.01 * x[0].sin());
        let r = ricci_flat_check(&phi).unwrap();
        assert!(r.oscillation > 1e-4);
        assert!(r.laplacian_sup > 0.0);
    }

    #[test]
    fn non_psh_potential_is_rejected() {
        let phi = ScalarField::cube(1, 9, 1.0).unwrap().sample(|x| -half_norm_sq(x));
        assert!(matches!(ricci_flat_check(&phi), Err(Error::NotPsh { .. })));
    }
}
