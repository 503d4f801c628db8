//! Numerical laboratory for the complex Monge-Ampère equation det(2u_{z_j z̄_k}) = 1.
//!
//! * [`linalg`]: the identification ℂⁿ ≅ ℝ²ⁿ, Hermitian embedding, grid fields.
//! * [`operator`]: the real-Hessian operator F and Monte-Carlo probes of its structure constants.
//! * [`viscosity`]: touching-quadratic tests and the Blocki example.
//! * [`solver`]: damped Newton Dirichlet solver on boxes and the discrete comparison check.
//! * [`liouville`]: the rescaling ladder and the Ricci-flat log-det diagnostic.
//! * [`config`]: the `key = value` experiment configuration.
//! * [`cli`]: experiment runners, CSV output and exit codes.

pub mod error;
pub mod linalg;
pub mod operator;
pub mod solver;
pub mod viscosity;
pub mod liouville;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
