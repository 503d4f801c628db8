use rand::Rng;
use rayon::prelude::*;

use super::{solve_dirichlet, BoundaryProfile, DirichletProblem, SolveOptions};
use crate::error::{Error, Result};
use crate::linalg::{format_f64, sample, ScalarField};

/// Multiplier of h² in the discrete comparison slack.
pub const COMPARISON_SLACK_FACTOR: f64 = 10.0;

/// Interior and boundary sup-gaps between two fields on one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub interior_gap: f64,
    pub boundary_gap: f64,
    /// slack factor · h².
    pub slack: f64,
}

impl ComparisonReport {
    /// interior_gap ≤ boundary_gap + slack.
    pub fn holds(&self) -> bool {
        self.interior_gap <= self.boundary_gap + self.slack
    }
}

pub fn comparison_check(u1: &ScalarField, u2: &ScalarField) -> Result<ComparisonReport> {
    comparison_check_with_slack(u1, u2, COMPARISON_SLACK_FACTOR)
}

pub fn comparison_check_with_slack(u1: &ScalarField, u2: &ScalarField, slack_factor: f64) -> Result<ComparisonReport> {
    if !u1.same_grid(u2) {
        return Err(Error::GridMismatch);
    }
    let mut interior_gap = 0.0_f64;
    let mut boundary_gap = 0.0_f64;
    for node in 0..u1.len() {
        let gap = (u1.get(node) - u2.get(node)).abs();
        if u1.is_interior(node) {
            interior_gap = interior_gap.max(gap);
        } else {
            boundary_gap = boundary_gap.max(gap);
        }
    }
    let h = u1.max_spacing();
    Ok(ComparisonReport { interior_gap, boundary_gap, slack: slack_factor * h * h })
}

/// Two profiles of the same kind with lower ≤ upper pointwise.
pub fn random_ordered_pair<R: Rng + ?Sized>(rng: &mut R) -> (BoundaryProfile, BoundaryProfile) {
    let lift = rng.random_range(0.01..0.1);
    match rng.random_range(0..3) {
        0 => {
            let alpha = rng.random_range(0.5..1.9);
            let c = rng.random_range(0.0..0.1);
            (BoundaryProfile::Power { c, alpha }, BoundaryProfile::Power { c: c + lift, alpha })
        }
        1 => {
            let c = rng.random_range(0.0..0.1);
            (BoundaryProfile::LogDamped { c }, BoundaryProfile::LogDamped { c: c + lift })
        }
        _ => {
            let a = rng.random_range(-0.3..0.3);
            let b = rng.random_range(-0.1..0.1);
            (BoundaryProfile::Linear { a, b }, BoundaryProfile::Linear { a, b: b + lift })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub pair: usize,
    pub lower: BoundaryProfile,
    pub upper: BoundaryProfile,
    pub outcome: std::result::Result<ComparisonReport, Error>,
}

impl ComparisonRow {
    pub const CSV_HEADER: &'static str = "pair,lower,upper,interior_gap,boundary_gap,slack,holds";

    pub fn holds(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.holds())
    }

    pub fn csv_row(&self) -> String {
        let lower = self.lower.to_string().replace(", ", " ");
        let upper = self.upper.to_string().replace(", ", " ");
        match &self.outcome {
            Ok(r) => format!(
                "{},{lower},{upper},{},{},{},{}",
                self.pair,
                format_f64(r.interior_gap),
                format_f64(r.boundary_gap),
                format_f64(r.slack),
                r.holds()
            ),
            Err(e) => format!("{},{lower},{upper},nan,nan,nan,{}", self.pair, e.to_string().replace(',', ";")),
        }
    }
}

/// Solves `pairs` random ordered boundary pairs on the unit box and compares each.
pub fn comparison_suite(
    n: usize,
    points_per_axis: usize,
    pairs: usize,
    master_seed: u64,
    slack_factor: f64,
    opts: &SolveOptions,
) -> Vec<ComparisonRow> {
    (0..pairs)
        .into_par_iter()
        .map(|pair| {
            let mut rng = sample::stream_rng(master_seed, pair as u64);
            let (lower, upper) = random_ordered_pair(&mut rng);
            let solve = |g| solve_dirichlet(&DirichletProblem::new(n, points_per_axis, 1.0, g), opts);
            let outcome = solve(lower).and_then(|(u1, _)| {
                let (u2, _) = solve(upper)?;
                comparison_check_with_slack(&u1, &u2, slack_factor)
            });
            ComparisonRow { pair, lower, upper, outcome }
        })
        .collect()
}
