use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used by every positive-semidefiniteness test.
pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Tolerance for Hermitian symmetry checks, relative to the matrix norm.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Absolute slack allowed below zero for an eigenvalue of a matrix with norm `norm`.
pub fn psd_tolerance(norm: f64) -> f64 {
    PSD_RELATIVE_TOLERANCE * norm.max(1.0)
}

/// Real symmetric matrix stored as its packed upper triangle.
///
/// Symmetry is structural: `get(i, j) == get(j, i)` for every index pair.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * dim - r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, c);
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Reads the upper triangle of a square row-major array.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        Self::from_fn(rows.len(), |i, j| rows[i][j])
    }

    /// Symmetric part ½(A + Aᵀ) of a square dense matrix.
    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = packed_index(self.dim, i, j);
        self.packed[k] = v;
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            packed: self.packed.iter().map(|v| v * c).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product tr(AB).
    pub fn frobenius_dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i) * other.get(i, i);
            for j in (i + 1)..self.dim {
                s += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Eigenvalues (ascending) together with the matching orthonormal eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.to_dmatrix());
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim, self.dim, |i, c| eig.eigenvectors[(i, order[c])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Spectral norm max |λᵢ|.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self)
    }

    /// PSD test on the eigenvalues with the shared tolerance.
    pub fn is_psd(&self) -> bool {
        let ev = self.eigenvalues();
        let norm = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        ev.first().is_none_or(|&l| l >= -psd_tolerance(norm))
    }

    /// Applies a scalar function to the spectrum: V diag(f(λ)) Vᵀ.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (values, vectors) = self.eigen();
        Self::from_fn(self.dim, |i, j| {
            (0..self.dim)
                .map(|k| vectors[(i, k)] * f(values[k]) * vectors[(j, k)])
                .sum()
        })
    }

    /// Congruence Aᵀ M A for a square A.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Self {
        let m = self.to_dmatrix();
        Self::from_dmatrix(&(a.transpose() * m * a))
    }

    /// Quadratic form vᵀ M v.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i) * v[i] * v[i];
            for j in (i + 1)..self.dim {
                s += 2.0 * self.get(i, j) * v[i] * v[j];
            }
        }
        s
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:>12.6e}", self.get(i, j)))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix {
            dim: self.dim,
            packed: self.packed.iter().zip(&rhs.packed).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix {
            dim: self.dim,
            packed: self.packed.iter().zip(&rhs.packed).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, c: f64) -> SymMatrix {
        self.scale(c)
    }
}

/// The complex structure J = [[0, −Iₙ], [Iₙ, 0]] on ℝ²ⁿ with coordinates (x₁..xₙ, y₁..yₙ).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    n: usize,
    matrix: DMatrix<f64>,
}

impl ComplexStructure {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "complex dimension must be positive");
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            matrix[(k, n + k)] = -1.0;
            matrix[(n + k, k)] = 1.0;
        }
        Self { n, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Frobenius norm of the commutator MJ − JM.
    pub fn commutator_norm(&self, m: &SymMatrix) -> f64 {
        let md = m.to_dmatrix();
        (&md * &self.matrix - &self.matrix * &md).norm()
    }
}

/// Index and sign with J eₐ = s·e_{π(a)}.
#[inline]
fn j_image(n: usize, a: usize) -> (usize, f64) {
    if a < n {
        (a + n, 1.0)
    } else {
        (a - n, -1.0)
    }
}

/// Jᵀ M J, computed by permuting indices.
pub fn j_conjugate(m: &SymMatrix) -> SymMatrix {
    assert!(m.dim() % 2 == 0, "J acts on even dimensions only");
    let n = m.dim() / 2;
    SymMatrix::from_fn(m.dim(), |a, b| {
        let (pa, sa) = j_image(n, a);
        let (pb, sb) = j_image(n, b);
        sa * sb * m.get(pa, pb)
    })
}

/// The J-invariant part ½(M + JᵀMJ).
pub fn j_project(m: &SymMatrix) -> SymMatrix {
    let jm = j_conjugate(m);
    SymMatrix::from_fn(m.dim(), |a, b| 0.5 * (m.get(a, b) + jm.get(a, b)))
}

/// Spectral norm through the symmetric eigensolver.
pub fn spectral_norm(m: &SymMatrix) -> f64 {
    m.eigenvalues().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Hermitian matrix H = A + iB with A symmetric and B antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl HermitianMatrix {
    pub fn new(re: DMatrix<f64>, im: DMatrix<f64>) -> Result<Self> {
        let n = re.nrows();
        if re.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: re.ncols(),
            });
        }
        if im.nrows() != n || im.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: im.nrows(),
            });
        }
        let scale = (re.norm_squared() + im.norm_squared()).sqrt().max(1.0);
        let asym = (&re - re.transpose()).amax().max((&im + im.transpose()).amax());
        if asym > HERMITIAN_TOLERANCE * scale {
            return Err(Error::InvalidProblem(format!(
                "matrix is not Hermitian (asymmetry {asym:.3e})"
            )));
        }
        Ok(Self { re, im })
    }

    pub fn from_complex(h: &DMatrix<Complex64>) -> Result<Self> {
        Self::new(h.map(|z| z.re), h.map(|z| z.im))
    }

    pub fn real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            re: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
            im: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::real_diagonal(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.re.nrows()
    }

    pub fn real_part(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn imag_part(&self) -> &DMatrix<f64> {
        &self.im
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            re: &self.re * c,
            im: &self.im * c,
        }
    }

    /// Entrywise complex conjugate (equal to the transpose for Hermitian matrices).
    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// Determinant through complex LU factorization.
    pub fn determinant(&self) -> f64 {
        self.to_complex().determinant().re
    }

    /// Eigenvalues (ascending) from the complex Hermitian eigensolver.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_complex())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.re - &other.re).amax().max((&self.im - &other.im).amax())
    }
}

/// ι(A + iB) = [[A, −B], [B, A]].
pub fn embed(h: &HermitianMatrix) -> SymMatrix {
    let n = h.n();
    let (a, b) = (h.real_part(), h.imag_part());
    SymMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => -b[(i, j - n)],
        (false, true) => b[(i - n, j)],
        (false, false) => a[(i - n, j - n)],
    })
}

/// Inverse of [`embed`] on the commutant of J.
pub fn inverse_embed(m: &SymMatrix, tol: f64) -> Result<HermitianMatrix> {
    if m.dim() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: m.dim() + 1,
            got: m.dim(),
        });
    }
    let n = m.dim() / 2;
    let commutator = ComplexStructure::new(n).commutator_norm(m);
    if commutator > tol {
        return Err(Error::NotJInvariant { commutator });
    }
    // average the two copies of each block to absorb rounding
    let re = DMatrix::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(n + i, n + j)));
    let im = DMatrix::from_fn(n, n, |i, j| 0.5 * (m.get(n + i, j) - m.get(i, n + j)));
    HermitianMatrix::new(re, im)
}

/// det^{1/2} of a positive-definite symmetric matrix as exp(½ Σ log λᵢ).
///
/// Returns 0 when an eigenvalue is non-positive.
pub fn det_sqrt(m: &SymMatrix) -> f64 {
    det_sqrt_from_eigenvalues(&m.eigenvalues())
}

pub(crate) fn det_sqrt_from_eigenvalues(ev: &[f64]) -> f64 {
    if ev.iter().any(|&l| l <= 0.0) {
        return 0.0;
    }
    (0.5 * ev.iter().map(|l| l.ln()).sum::<f64>()).exp()
}

/// Computes det(2H) by complex LU and det^{1/2}(ι(2H)) by the real eigensolver.
pub fn det_identity_check(h: &HermitianMatrix) -> Result<(f64, f64)> {
    let two_h = h.scale(2.0);
    let real = embed(&two_h);
    let ev = real.eigenvalues();
    let norm = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_eigen = ev.first().copied().unwrap_or(0.0);
    if min_eigen < -psd_tolerance(norm) {
        return Err(Error::NotPsd { min_eigen });
    }
    let clamped: Vec<f64> = ev.iter().map(|l| l.max(0.0)).collect();
    let lhs = two_h.determinant();
    let rhs = det_sqrt_from_eigenvalues(&clamped);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn approx_eq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn structure_squares_to_minus_identity() {
        for n in 1..=3 {
            let j = ComplexStructure::new(n);
            let jm = j.matrix();
            let sq = jm * jm;
            assert_eq!(sq, -DMatrix::<f64>::identity(2 * n, 2 * n));
            assert_eq!(jm.transpose() * jm, DMatrix::<f64>::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn j_conjugate_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let m = sample::symmetric(&mut rng, 2 * n, 1.0);
            let j = ComplexStructure::new(n);
            let dense = j.matrix().transpose() * m.to_dmatrix() * j.matrix();
            assert!(approx_eq(&j_conjugate(&m), &SymMatrix::from_dmatrix(&dense), 1e-15));
        }
    }

    #[test]
    fn embed_scalar_and_identity() {
        let h = HermitianMatrix::real_diagonal(&[2.0]);
        assert_eq!(embed(&h), SymMatrix::diagonal(&[2.0, 2.0]));
        assert_eq!(embed(&HermitianMatrix::identity(3)), SymMatrix::identity(6));
    }

    #[test]
    fn embed_rank_deficient_two_by_two() {
        let re = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let im = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let h = HermitianMatrix::new(re, im).unwrap();
        let m = embed(&h);
        let expected = SymMatrix::from_rows(&[
            &[1.0, 0.0, 0.0, -1.0],
            &[0.0, 1.0, 1.0, 0.0],
            &[0.0, 1.0, 1.0, 0.0],
            &[-1.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(m, expected);
        let det = m.to_dmatrix().determinant();
        assert!(det.abs() < 1e-14);
        assert!(h.determinant().abs() < 1e-14);
        // eigenvalues {0, 2} doubled
        let ev = m.eigenvalues();
        for (got, want) in ev.iter().zip([0.0, 0.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let re = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let im = DMatrix::zeros(2, 2);
        assert!(HermitianMatrix::new(re, im).is_err());
    }

    #[test]
    fn j_project_examples() {
        let c = SymMatrix::scaled_identity(4, 2.5);
        assert_eq!(j_project(&c), c);
        let d = SymMatrix::diagonal(&[3.0, 1.0]);
        assert_eq!(j_project(&d), SymMatrix::scaled_identity(2, 2.0));
        let ph = SymMatrix::diagonal(&[1.0, -1.0]);
        assert_eq!(j_project(&ph), SymMatrix::zeros(2));
    }

    #[test]
    fn inverse_embed_examples() {
        let h = inverse_embed(&SymMatrix::identity(4), 1e-12).unwrap();
        assert_eq!(h, HermitianMatrix::identity(2));
        let err = inverse_embed(&SymMatrix::diagonal(&[1.0, -1.0]), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NotJInvariant { .. }));
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&SymMatrix::diagonal(&[3.0, -5.0])), 5.0);
        assert_eq!(spectral_norm(&SymMatrix::zeros(4)), 0.0);
    }

    /// Power iteration on M², independent of the eigensolver.
    fn power_iteration_norm(m: &SymMatrix) -> f64 {
        let d = m.dim();
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = m.apply(&m.apply(&v));
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / norm).collect();
            lambda = norm;
        }
        lambda.sqrt()
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            // well-separated spectrum so power iteration converges quickly
            let q = sample::orthogonal(&mut rng, 4);
            let m = SymMatrix::diagonal(&[-3.0, 1.0, 0.5, 2.0]).congruence(&q.transpose());
            let oracle = power_iteration_norm(&m);
            assert!((spectral_norm(&m) - oracle).abs() <= 1e-10 * oracle);
        }
    }

    #[test]
    fn det_identity_examples() {
        let (l, r) = det_identity_check(&HermitianMatrix::real_diagonal(&[0.5, 0.5])).unwrap();
        assert!((l - 1.0).abs() < 1e-14 && (r - 1.0).abs() < 1e-14);
        let (l, r) = det_identity_check(&HermitianMatrix::real_diagonal(&[1.0, 0.25])).unwrap();
        assert!((l - 1.0).abs() < 1e-14 && (r - 1.0).abs() < 1e-14);
        let err = det_identity_check(&HermitianMatrix::real_diagonal(&[1.0, -0.25])).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
    }

    #[test]
    fn norm_of_sum_with_conjugate_is_at_most_twice() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            for _ in 0..200 {
                let m = sample::symmetric(&mut rng, 2 * n, 1.0);
                let s = &m + &j_conjugate(&m);
                assert!(spectral_norm(&s) <= 2.0 * spectral_norm(&m) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn map_spectrum_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = &sample::psd(&mut rng, 4, 1.0) + &SymMatrix::identity(4);
        let inv = m.map_spectrum(|l| 1.0 / l);
        let prod = m.to_dmatrix() * inv.to_dmatrix();
        assert!((prod - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12);
    }
}
