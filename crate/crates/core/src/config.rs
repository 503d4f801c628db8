//! Line-oriented `key = value` experiment configuration.
//!
//! `#` starts a comment. Unknown and repeated keys are rejected. Every key has a
//! default, and [`Config::serialize`] writes all of them, so a serialized config
//! is a complete record of a run.

use std::fmt::Write as _;

use thiserror::Error;

use crate::solver::{BoundaryProfile, SolveOptions, COMPARISON_SLACK_FACTOR};
use crate::viscosity::{DEFAULT_BUMP_NORM, DEFAULT_RADIUS_CELLS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default(), key.as_ref().map(|k| format!("{k}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self { line: Some(line), key: Some(key.to_string()), message: message.into() }
    }

    fn key(key: &str, message: impl Into<String>) -> Self {
        Self { line: None, key: Some(key.to_string()), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    QuadraticBase,
    Linear,
    Power,
    LogDamped,
    QuadraticExcess,
}

impl ProfileKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "quadratic_base" => Self::QuadraticBase,
            "linear" => Self::Linear,
            "power" => Self::Power,
            "logdamped" => Self::LogDamped,
            "quadratic_excess" => Self::QuadraticExcess,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::QuadraticBase => "quadratic_base",
            Self::Linear => "linear",
            Self::Power => "power",
            Self::LogDamped => "logdamped",
            Self::QuadraticExcess => "quadratic_excess",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n: usize,
    pub points_per_axis: usize,
    pub halfwidth: f64,
    pub profile: ProfileKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub rhs: f64,
    pub solve: SolveOptions,
    pub scales: Vec<f64>,
    pub richardson: bool,
    pub comparison_pairs: usize,
    pub comparison_slack_factor: f64,
    pub operator_delta: f64,
    pub operator_samples: usize,
    pub h1_pairs: usize,
    pub blocki_points: usize,
    pub blocki_fd_step: f64,
    pub blocki_blowup_w: f64,
    pub growth_t: f64,
    pub probe_points: usize,
    pub probe_trials: usize,
    pub probe_radius_cells: usize,
    pub probe_bump_norm: f64,
    pub probe_grid_points: usize,
    pub probe_grid_halfwidth: f64,
    pub ricci_sine: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 2,
            points_per_axis: 13,
            halfwidth: 1.0,
            profile: ProfileKind::Power,
            a: 0.0,
            b: 0.0,
            c: 0.1,
            alpha: 1.5,
            rhs: 1.0,
            solve: SolveOptions::default(),
            scales: vec![1.0, 2.0, 4.0, 8.0],
            richardson: true,
            comparison_pairs: 20,
            comparison_slack_factor: COMPARISON_SLACK_FACTOR,
            operator_delta: 0.1,
            operator_samples: 10_000,
            h1_pairs: 10_000,
            blocki_points: 100,
            blocki_fd_step: 1e-3,
            blocki_blowup_w: 1.0,
            growth_t: 100.0,
            probe_points: 4,
            probe_trials: 1000,
            probe_radius_cells: DEFAULT_RADIUS_CELLS,
            probe_bump_norm: DEFAULT_BUMP_NORM,
            probe_grid_points: 7,
            probe_grid_halfwidth: 0.03,
            ricci_sine: 0.01,
            seed: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::at(line, key, format!("cannot parse {value:?}")))
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|t| parse_value(line, key, t.trim()))
        .collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError {
                line: Some(line),
                key: None,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::at(line, key, "repeated key"));
            }
            seen.push(key.to_string());
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let p = |v: &str| -> Result<f64, ConfigError> { parse_value(line, key, v) };
        let u = |v: &str| -> Result<usize, ConfigError> { parse_value(line, key, v) };
        match key {
            "n" => self.n = u(value)?,
            "points_per_axis" => self.points_per_axis = u(value)?,
            "halfwidth" => self.halfwidth = p(value)?,
            "profile" => {
                self.profile = ProfileKind::parse(value)
                    .ok_or_else(|| ConfigError::at(line, key, format!("unknown profile {value:?}")))?
            }
            "a" => self.a = p(value)?,
            "b" => self.b = p(value)?,
            "c" => self.c = p(value)?,
            "alpha" => self.alpha = p(value)?,
            "rhs" => self.rhs = p(value)?,
            "tolerance" => self.solve.tolerance = p(value)?,
            "max_iter" => self.solve.max_iter = u(value)?,
            "min_step_exponent" => self.solve.min_step_exponent = parse_value(line, key, value)?,
            "psh_floor" => self.solve.psh_floor = p(value)?,
            "linear_tolerance" => self.solve.linear_tolerance = p(value)?,
            "gmres_restart" => self.solve.gmres_restart = u(value)?,
            "max_linear_iterations" => self.solve.max_linear_iterations = u(value)?,
            "scales" => self.scales = parse_list(line, key, value)?,
            "richardson" => self.richardson = parse_value(line, key, value)?,
            "comparison_pairs" => self.comparison_pairs = u(value)?,
            "comparison_slack_factor" => self.comparison_slack_factor = p(value)?,
            "operator_delta" => self.operator_delta = p(value)?,
            "operator_samples" => self.operator_samples = u(value)?,
            "h1_pairs" => self.h1_pairs = u(value)?,
            "blocki_points" => self.blocki_points = u(value)?,
            "blocki_fd_step" => self.blocki_fd_step = p(value)?,
            "blocki_blowup_w" => self.blocki_blowup_w = p(value)?,
            "growth_t" => self.growth_t = p(value)?,
            "probe_points" => self.probe_points = u(value)?,
            "probe_trials" => self.probe_trials = u(value)?,
            "probe_radius_cells" => self.probe_radius_cells = u(value)?,
            "probe_bump_norm" => self.probe_bump_norm = p(value)?,
            "probe_grid_points" => self.probe_grid_points = u(value)?,
            "probe_grid_halfwidth" => self.probe_grid_halfwidth = p(value)?,
            "ricci_sine" => self.ricci_sine = p(value)?,
            "seed" => self.seed = parse_value(line, key, value)?,
            _ => return Err(ConfigError::at(line, key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(ConfigError::key(key, msg)) };
        check(matches!(self.n, 1 | 2), "n", "complex dimension must be 1 or 2")?;
        check(
            self.points_per_axis >= 3 && self.points_per_axis % 2 == 1,
            "points_per_axis",
            "must be odd and at least 3",
        )?;
        check(self.halfwidth > 0.0 && self.halfwidth.is_finite(), "halfwidth", "must be positive")?;
        for (key, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("alpha", self.alpha)] {
            check(v.is_finite(), key, "must be finite")?;
        }
        if self.profile == ProfileKind::Power {
            check(self.alpha < 2.0, "alpha", "power profile needs alpha < 2 (sub-quadratic growth)")?;
            check(self.alpha > 0.0, "alpha", "power profile needs alpha > 0")?;
        }
        check(self.rhs > 0.0 && self.rhs.is_finite(), "rhs", "must be positive")?;
        check(self.solve.tolerance > 0.0, "tolerance", "must be positive")?;
        check(self.solve.linear_tolerance > 0.0, "linear_tolerance", "must be positive")?;
        check(self.solve.gmres_restart > 0, "gmres_restart", "must be positive")?;
        check(!self.scales.is_empty(), "scales", "at least one rung")?;
        check(self.scales.iter().all(|r| *r >= 1.0 && r.is_finite()), "scales", "every factor must be >= 1")?;
        check(self.scales.windows(2).all(|w| w[1] > w[0]), "scales", "must be strictly increasing")?;
        check(self.comparison_slack_factor >= 0.0, "comparison_slack_factor", "must be non-negative")?;
        check(
            self.operator_delta > 0.0 && self.operator_delta < 1.0 / 3.0,
            "operator_delta",
            "must lie in (0, 1/3)",
        )?;
        check(self.operator_samples > 0, "operator_samples", "must be positive")?;
        check(self.blocki_fd_step > 0.0, "blocki_fd_step", "must be positive")?;
        check(self.growth_t > 0.0, "growth_t", "must be positive")?;
        check(self.probe_points > 0, "probe_points", "must be positive")?;
        check(
            self.probe_grid_points % 2 == 1 && self.probe_grid_points >= 2 * self.probe_radius_cells + 1,
            "probe_grid_points",
            "must be odd and fit the probe radius around the centre",
        )?;
        check(self.probe_grid_halfwidth > 0.0, "probe_grid_halfwidth", "must be positive")?;
        check(self.probe_bump_norm >= 0.0, "probe_bump_norm", "must be non-negative")?;
        Ok(())
    }

    pub fn boundary_profile(&self) -> BoundaryProfile {
        match self.profile {
            ProfileKind::QuadraticBase => BoundaryProfile::QuadraticBase,
            ProfileKind::Linear => BoundaryProfile::Linear { a: self.a, b: self.b },
            ProfileKind::Power => BoundaryProfile::Power { c: self.c, alpha: self.alpha },
            ProfileKind::LogDamped => BoundaryProfile::LogDamped { c: self.c },
            ProfileKind::QuadraticExcess => BoundaryProfile::QuadraticExcess { c: self.c },
        }
    }

    /// Every key, in a fixed order. Floats use the shortest exact representation.
    pub fn serialize(&self) -> String {
        let scales: Vec<String> = self.scales.iter().map(|r| r.to_string()).collect();
        let s = &self.solve;
        let entries: Vec<(&str, String)> = vec![
            ("n", self.n.to_string()),
            ("points_per_axis", self.points_per_axis.to_string()),
            ("halfwidth", self.halfwidth.to_string()),
            ("profile", self.profile.name().to_string()),
            ("a", self.a.to_string()),
            ("b", self.b.to_string()),
            ("c", self.c.to_string()),
            ("alpha", self.alpha.to_string()),
            ("rhs", self.rhs.to_string()),
            ("tolerance", s.tolerance.to_string()),
            ("max_iter", s.max_iter.to_string()),
            ("min_step_exponent", s.min_step_exponent.to_string()),
            ("psh_floor", s.psh_floor.to_string()),
            ("linear_tolerance", s.linear_tolerance.to_string()),
            ("gmres_restart", s.gmres_restart.to_string()),
            ("max_linear_iterations", s.max_linear_iterations.to_string()),
            ("scales", scales.join(", ")),
            ("richardson", self.richardson.to_string()),
            ("comparison_pairs", self.comparison_pairs.to_string()),
            ("comparison_slack_factor", self.comparison_slack_factor.to_string()),
            ("operator_delta", self.operator_delta.to_string()),
            ("operator_samples", self.operator_samples.to_string()),
            ("h1_pairs", self.h1_pairs.to_string()),
            ("blocki_points", self.blocki_points.to_string()),
            ("blocki_fd_step", self.blocki_fd_step.to_string()),
            ("blocki_blowup_w", self.blocki_blowup_w.to_string()),
            ("growth_t", self.growth_t.to_string()),
            ("probe_points", self.probe_points.to_string()),
            ("probe_trials", self.probe_trials.to_string()),
            ("probe_radius_cells", self.probe_radius_cells.to_string()),
            ("probe_bump_norm", self.probe_bump_norm.to_string()),
            ("probe_grid_points", self.probe_grid_points.to_string()),
            ("probe_grid_halfwidth", self.probe_grid_halfwidth.to_string()),
            ("ricci_sine", self.ricci_sine.to_string()),
            ("seed", self.seed.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}
