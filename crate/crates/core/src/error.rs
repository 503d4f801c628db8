use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix does not commute with J (commutator norm {commutator:.3e})")]
    NotJInvariant { commutator: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigen:.3e})")]
    NotPsd { min_eigen: f64 },

    #[error("perturbation P is not positive semidefinite (smallest eigenvalue {min_eigen:.3e})")]
    PNotPsd { min_eigen: f64 },

    #[error("grid point is too close to the boundary for the stencil")]
    BoundaryTooClose,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("matrix is outside the regular branch of F (smallest eigenvalue of M + J^T M J is {min_eigen:.3e})")]
    DegenerateBranch { min_eigen: f64 },

    #[error("delta must lie in (0, 1/3), got {0}")]
    InvalidDelta(f64),

    #[error("touching radius {radius} exceeds the grid around the probe point")]
    RadiusExceedsGrid { radius: f64 },

    #[error("point is too close to the singular set z = 0 (|z| = {modulus:.3e})")]
    TooCloseToSingularSet { modulus: f64 },

    #[error("initial iterate is not plurisubharmonic (min complex eigenvalue {min_eigen:.3e})")]
    NotPshInitial { min_eigen: f64 },

    #[error("discrete complex Hessian is not positive definite at {count} nodes")]
    NotPsh { count: usize },

    #[error("Newton iteration stalled: damping fell below 2^-{min_exponent} at iteration {iteration}")]
    NewtonStalled { iteration: usize, min_exponent: u32 },

    #[error("Newton iteration reached {0} iterations without converging")]
    MaxIterations(usize),

    #[error("linear solve diverged after {iterations} iterations (relative residual {relative_residual:.3e})")]
    LinearSolveDiverged {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
