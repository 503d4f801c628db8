//! Matrix algebra for the identification ℂⁿ ≅ ℝ²ⁿ and the grid fields carrying u.
//!
//! Real coordinates are ordered (x₁..xₙ, y₁..yₙ), so the complex structure has
//! the block form J = [[0, −I], [I, 0]] and the embedding of a Hermitian matrix
//! A + iB is [[A, −B], [B, A]].

mod field;
mod matrix;
pub mod sample;

pub use field::{complex_hessian_from_real, format_f64, ScalarField};
pub use matrix::{
    det_identity_check, det_sqrt, embed, inverse_embed, j_conjugate, j_project, psd_tolerance,
    spectral_norm, ComplexStructure, HermitianMatrix, SymMatrix, HERMITIAN_TOLERANCE,
    PSD_RELATIVE_TOLERANCE,
};
pub(crate) use matrix::det_sqrt_from_eigenvalues;
