//! The `cmalab` command line: one subcommand per experiment.
//!
//! Every run writes `manifest.txt` (the fully resolved configuration, itself a
//! valid config file) next to its CSV outputs. Exit status is 0 on success, 1
//! when a solve or a verification fails, and 2 on configuration errors.

use std::f64::consts::TAU;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;

use crate::config::{Config, ConfigError};
use crate::error::Error;
use crate::linalg::{format_f64, sample, ScalarField};
use crate::liouville::{ricci_flat_check, run_ladder, LadderOptions, LadderReport};
use crate::operator::{certify, h1_sweep, FamilyConstants};
use crate::solver::{comparison_suite, solve_dirichlet, ComparisonRow, DirichletProblem, Rhs, SolveReport};
use crate::viscosity::{
    blocki_det_check, blocki_det_fd, blocki_field, blocki_growth_probe, blocki_min_complex_eigenvalue,
    c2_blowup_probe, subsolution_probe, supersolution_probe, ProbeConfig, TouchingReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Tolerance for the closed-form Blocki determinant.
pub const BLOCKI_CLOSED_FORM_TOLERANCE: f64 = 1e-10;
/// Tolerance for the finite-difference Blocki determinant.
pub const BLOCKI_FD_TOLERANCE: f64 = 1e-3;
/// Tolerance for u(t, t)/t³ → 1.
pub const GROWTH_TOLERANCE: f64 = 1e-2;
/// Allowed relative error of c2_blowup·h = 2(1 + |w|²), in units of machine epsilon.
/// The steps 1e−1 and 1e−3 are not binary fractions, so the identity holds only to rounding.
pub const BLOWUP_ULPS: f64 = 4.0;
/// Blow-up steps tabulated by `blocki-verify`.
pub const BLOWUP_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Operator-norm bound for the base point of the H1 sweep.
const H1_BASE_NORM: f64 = 0.5;
/// Operator-norm bound for the perturbation of the H1 sweep.
const H1_PERTURBATION_NORM: f64 = 1.0;

#[derive(Debug, Parser)]
#[command(name = "cmalab", version, about = "Complex Monge-Ampère experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    /// key = value configuration file; defaults are used when absent
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// master seed, overrides the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// -v prints a summary, -vv also traces Newton iterations
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    /// Dirichlet solve; writes solution.field and solve_report.csv
    Solve,
    /// rescaling ladder; writes ladder.csv
    Ladder,
    /// Blocki example checks; writes blocki_*.csv
    BlockiVerify,
    /// Monte-Carlo structure constants of F; writes operator_*.csv
    OperatorCertify,
    /// randomized ordered boundary pairs; writes comparison.csv
    ComparisonTest,
    /// log-det diagnostic of |x|²/2 + s·sin(x₁); writes ricci.csv
    RicciCheck,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Ladder => "ladder",
            Self::BlockiVerify => "blocki-verify",
            Self::OperatorCertify => "operator-certify",
            Self::ComparisonTest => "comparison-test",
            Self::RicciCheck => "ricci-check",
        }
    }
}

/// A resolved command: parsed configuration plus where to write.
#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub kind: CommandKind,
    pub config: Config,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub verbosity: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: io::Error },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("solver failure: {0}")]
    Solver(#[from] Error),
    #[error("verification failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ConfigRead { .. } => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

pub fn resolve(cli: &Cli) -> Result<Command, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|source| CliError::ConfigRead { path: path.clone(), source })?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(Command { kind: cli.command, config, out: cli.out.clone(), threads: cli.threads, verbosity: cli.verbose })
}

pub fn manifest(command: &Command) -> String {
    let threads = command.threads.map_or("auto".to_string(), |t| t.to_string());
    format!(
        "# cmalab manifest\n# command: {}\n# threads: {threads}\n# norms are box (max over grid nodes) norms\n{}",
        command.kind.name(),
        command.config.serialize()
    )
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Runs the command and returns its exit status, printing diagnostics to stderr.
pub fn run(command: &Command) -> i32 {
    match execute(command) {
        Ok(summary) => {
            if command.verbosity > 0 {
                eprintln!("{summary}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("cmalab {}: {e}", command.kind.name());
            e.exit_code()
        }
    }
}

/// Parses arguments, configures the thread pool and runs.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let command = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cmalab: {e}");
            return e.exit_code();
        }
    };
    if let Some(t) = command.threads {
        // a second configuration attempt in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    if command.verbosity > 1 {
        std::env::set_var("CMALAB_TRACE", "1");
    }
    run(&command)
}

fn execute(command: &Command) -> Result<String, CliError> {
    command.config.validate()?;
    fs::create_dir_all(&command.out)?;
    write(&command.out, "manifest.txt", &manifest(command))?;
    let cfg = &command.config;
    let out = &command.out;
    match command.kind {
        CommandKind::Solve => {
            let (u, report) = solve(cfg)?;
            write(out, "solution.field", &u.dump())?;
            write(out, "solve_report.csv", &format!("{}\n{}\n", SolveReport::CSV_HEADER, report.csv_row()))?;
            Ok(format!("solve: {} Newton iterations, residual {:e}", report.iterations, report.final_residual))
        }
        CommandKind::Ladder => {
            let report = ladder(cfg)?;
            write(out, "ladder.csv", &report.to_csv())?;
            if !report.all_succeeded() {
                return Err(CliError::Check("some ladder rungs failed to solve".into()));
            }
            Ok(format!("ladder: {} rungs, decay exponent {:?}", report.rows.len(), report.decay_exponent))
        }
        CommandKind::BlockiVerify => {
            let report = blocki_verify(cfg)?;
            write(out, "blocki_det.csv", &report.det_csv)?;
            write(out, "blocki_blowup.csv", &report.blowup_csv)?;
            write(out, "blocki_growth.csv", &report.growth_csv)?;
            write(out, "blocki_probes.csv", &report.probe_csv)?;
            write(out, "blocki_violations.csv", &report.violation_csv)?;
            report.check()?;
            Ok("blocki-verify: all checks passed".into())
        }
        CommandKind::OperatorCertify => {
            let (constants, violations) = operator_certify(cfg)?;
            write(out, "operator_constants.csv", &format!("{}\n{}\n", FamilyConstants::CSV_HEADER, constants.csv_row()))?;
            write(out, "operator_h1.csv", &format!("pairs,violations\n{},{violations}\n", cfg.h1_pairs))?;
            if violations > 0 {
                return Err(CliError::Check(format!("{violations} monotonicity violations")));
            }
            if !(constants.theta_hat > 0.0 && constants.k_hat.is_finite()) {
                return Err(CliError::Check("structure constants out of range".into()));
            }
            Ok(format!("operator-certify: theta {:e}, K {:e}", constants.theta_hat, constants.k_hat))
        }
        CommandKind::ComparisonTest => {
            let rows = comparison(cfg);
            let mut csv = format!("{}\n", ComparisonRow::CSV_HEADER);
            for r in &rows {
                csv.push_str(&r.csv_row());
                csv.push('\n');
            }
            write(out, "comparison.csv", &csv)?;
            let failed = rows.iter().filter(|r| !r.holds()).count();
            if failed > 0 {
                return Err(CliError::Check(format!("{failed} of {} pairs violate comparison", rows.len())));
            }
            Ok(format!("comparison-test: {} pairs hold", rows.len()))
        }
        CommandKind::RicciCheck => {
            let r = ricci_flat_check(&ricci_potential(cfg)?)?;
            write(
                out,
                "ricci.csv",
                &format!(
                    "sine_amplitude,laplacian_sup,oscillation\n{},{},{}\n",
                    format_f64(cfg.ricci_sine),
                    format_f64(r.laplacian_sup),
                    format_f64(r.oscillation)
                ),
            )?;
            Ok(format!("ricci-check: oscillation {:e}", r.oscillation))
        }
    }
}

pub fn solve(cfg: &Config) -> Result<(ScalarField, SolveReport), CliError> {
    let problem = DirichletProblem::new(cfg.n, cfg.points_per_axis, cfg.halfwidth, cfg.boundary_profile())
        .with_rhs(Rhs::Constant(cfg.rhs));
    Ok(solve_dirichlet(&problem, &cfg.solve)?)
}

pub fn ladder(cfg: &Config) -> Result<LadderReport, CliError> {
    let options = LadderOptions {
        n: cfg.n,
        points_per_axis: cfg.points_per_axis,
        richardson: cfg.richardson,
        solve: cfg.solve,
    };
    Ok(run_ladder(cfg.boundary_profile(), &cfg.scales, &options)?)
}

pub fn operator_certify(cfg: &Config) -> Result<(FamilyConstants, usize), CliError> {
    let constants = certify(cfg.n, cfg.operator_delta, cfg.operator_samples, cfg.seed)?;
    let violations = h1_sweep(cfg.n, cfg.h1_pairs, H1_BASE_NORM, H1_PERTURBATION_NORM, cfg.seed);
    Ok((constants, violations))
}

pub fn comparison(cfg: &Config) -> Vec<ComparisonRow> {
    comparison_suite(cfg.n, cfg.points_per_axis, cfg.comparison_pairs, cfg.seed, cfg.comparison_slack_factor, &cfg.solve)
}

pub fn ricci_potential(cfg: &Config) -> Result<ScalarField, CliError> {
    let s = cfg.ricci_sine;
    Ok(ScalarField::cube(cfg.n, cfg.points_per_axis, cfg.halfwidth)?
        .sample(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>() + s * x[0].sin()))
}

/// Outcome of the Blocki checks, with the CSV tables already rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockiReport {
    pub max_closed_form_error: f64,
    pub max_fd_error: f64,
    /// relative
    pub max_blowup_error: f64,
    pub growth_error: f64,
    pub probe_trials: usize,
    pub touching: usize,
    pub violations: usize,
    pub det_csv: String,
    pub blowup_csv: String,
    pub growth_csv: String,
    pub probe_csv: String,
    pub violation_csv: String,
}

impl BlockiReport {
    pub fn check(&self) -> Result<(), CliError> {
        let mut failures = Vec::new();
        if self.max_closed_form_error > BLOCKI_CLOSED_FORM_TOLERANCE {
            failures.push(format!("closed-form determinant off by {:e}", self.max_closed_form_error));
        }
        if self.max_fd_error > BLOCKI_FD_TOLERANCE {
            failures.push(format!("finite-difference determinant off by {:e}", self.max_fd_error));
        }
        if self.max_blowup_error > BLOWUP_ULPS * f64::EPSILON {
            failures.push(format!("blow-up scale identity off by {:e}", self.max_blowup_error));
        }
        if self.growth_error > GROWTH_TOLERANCE {
            failures.push(format!("growth ratio off by {:e}", self.growth_error));
        }
        if self.violations > 0 {
            failures.push(format!("{} viscosity probe violations", self.violations));
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::Check(failures.join("; ")))
        }
    }
}

fn polar<R: Rng + ?Sized>(rng: &mut R, r_lo: f64, r_hi: f64) -> Complex64 {
    let r = rng.random_range(r_lo..=r_hi);
    Complex64::from_polar(r, rng.random_range(0.0..TAU))
}

/// Stream offset separating probe-point draws from det-check draws.
const PROBE_STREAM_OFFSET: u64 = 1 << 32;

pub fn blocki_verify(cfg: &Config) -> Result<BlockiReport, CliError> {
    let mut det_csv = String::from("z_re,z_im,w_re,w_im,closed_form,finite_difference\n");
    let mut max_closed_form_error = 0.0_f64;
    let mut max_fd_error = 0.0_f64;
    for i in 0..cfg.blocki_points {
        let mut rng = sample::stream_rng(cfg.seed, i as u64);
        let z = polar(&mut rng, 0.5, 2.0);
        let w = polar(&mut rng, 0.0, 2.0);
        let exact = blocki_det_check(z, w)?;
        let fd = blocki_det_fd(z, w, cfg.blocki_fd_step)?;
        max_closed_form_error = max_closed_form_error.max((exact - 1.0).abs());
        max_fd_error = max_fd_error.max((fd - 1.0).abs());
        det_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_f64(z.re),
            format_f64(z.im),
            format_f64(w.re),
            format_f64(w.im),
            format_f64(exact),
            format_f64(fd)
        ));
    }

    let w = Complex64::new(cfg.blocki_blowup_w, 0.0);
    let expected = 2.0 * (1.0 + w.norm_sqr());
    let mut blowup_csv = String::from("h,w,quotient,quotient_times_h,expected\n");
    let mut max_blowup_error = 0.0_f64;
    for h in BLOWUP_STEPS {
        let q = c2_blowup_probe(h, w);
        max_blowup_error = max_blowup_error.max((q * h - expected).abs() / expected);
        blowup_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            format_f64(h),
            format_f64(cfg.blocki_blowup_w),
            format_f64(q),
            format_f64(q * h),
            format_f64(expected)
        ));
    }

    let ratio = blocki_growth_probe(cfg.growth_t);
    let growth_error = (ratio - 1.0).abs();
    let growth_csv = format!("t,ratio\n{},{}\n", format_f64(cfg.growth_t), format_f64(ratio));

    let per_point = cfg.probe_trials.div_ceil(cfg.probe_points);
    let mut probe_csv = String::from("point,z_re,z_im,w_re,w_im,min_complex_eigen,direction,trials,touching,violations\n");
    let mut violation_csv = format!("{}\n", TouchingReport::CSV_HEADER);
    let (mut probe_trials, mut touching, mut violations) = (0, 0, 0);
    for i in 0..cfg.probe_points {
        let mut rng = sample::stream_rng(cfg.seed, PROBE_STREAM_OFFSET + i as u64);
        let z = polar(&mut rng, 0.4, 0.6);
        let w = polar(&mut rng, 0.0, 0.4);
        let u = blocki_field(z, w, cfg.probe_grid_points, cfg.probe_grid_halfwidth)?;
        let probe = ProbeConfig {
            trials: per_point,
            radius_cells: cfg.probe_radius_cells,
            bump_norm: cfg.probe_bump_norm,
            seed: cfg.seed.wrapping_add(i as u64 + 1),
        };
        let node = u.center_node();
        for reports in [subsolution_probe(&u, node, &probe)?, supersolution_probe(&u, node, &probe)?] {
            let t = reports.iter().filter(|r| r.touching()).count();
            let bad: Vec<&TouchingReport> = reports.iter().filter(|r| r.is_violation()).collect();
            probe_trials += reports.len();
            touching += t;
            violations += bad.len();
            for r in &bad {
                violation_csv.push_str(&r.csv_row(&u));
                violation_csv.push('\n');
            }
            probe_csv.push_str(&format!(
                "{i},{},{},{},{},{},{},{},{t},{}\n",
                format_f64(z.re),
                format_f64(z.im),
                format_f64(w.re),
                format_f64(w.im),
                format_f64(blocki_min_complex_eigenvalue(z, w)),
                reports[0].direction,
                reports.len(),
                bad.len()
            ));
        }
    }

    Ok(BlockiReport {
        max_closed_form_error,
        max_fd_error,
        max_blowup_error,
        growth_error,
        probe_trials,
        touching,
        violations,
        det_csv,
        blowup_csv,
        growth_csv,
        probe_csv,
        violation_csv,
    })
}
