use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::matrix::{HermitianMatrix, SymMatrix};

/// Real values on a uniform tensor grid over a box in ℝ²ⁿ.
///
/// Axes are ordered (x₁..xₙ, y₁..yₙ) and values are stored row-major with the
/// first axis varying slowest. The number of points per axis is odd, so the box
/// center is always a node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    points_per_axis: usize,
    center: Vec<f64>,
    halfwidth: Vec<f64>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(n: usize, points_per_axis: usize, center: Vec<f64>, halfwidth: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("complex dimension must be positive".into()));
        }
        if points_per_axis < 3 || points_per_axis % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be odd and at least 3, got {points_per_axis}"
            )));
        }
        if center.len() != 2 * n || halfwidth.len() != 2 * n {
            return Err(Error::InvalidGrid(format!(
                "box needs {} center and halfwidth entries",
                2 * n
            )));
        }
        if halfwidth.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidGrid("halfwidths must be positive".into()));
        }
        let len = points_per_axis
            .checked_pow(2 * n as u32)
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        Ok(Self {
            n,
            points_per_axis,
            center,
            halfwidth,
            values: vec![0.0; len],
        })
    }

    /// The cube [−halfwidth, halfwidth]²ⁿ centered at the origin.
    pub fn cube(n: usize, points_per_axis: usize, halfwidth: f64) -> Result<Self> {
        Self::new(n, points_per_axis, vec![0.0; 2 * n], vec![halfwidth; 2 * n])
    }

    /// Samples `f` at every node.
    pub fn sample(mut self, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; self.dim()];
        for node in 0..self.len() {
            self.coords_into(node, &mut x);
            self.values[node] = f(&x);
        }
        self
    }

    /// Same grid, values replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            ..self.clone_grid()
        })
    }

    fn clone_grid(&self) -> Self {
        Self {
            n: self.n,
            points_per_axis: self.points_per_axis,
            center: self.center.clone(),
            halfwidth: self.halfwidth.clone(),
            values: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of real axes, 2n.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn halfwidth(&self) -> &[f64] {
        &self.halfwidth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.halfwidth[axis] / (self.points_per_axis - 1) as f64
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Flat-index offset of one step along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut idx = vec![0; self.dim()];
        let mut rest = node;
        for a in (0..self.dim()).rev() {
            idx[a] = rest % m;
            rest /= m;
        }
        idx
    }

    pub fn node_at(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.dim());
        index.iter().fold(0, |acc, &i| {
            assert!(i < self.points_per_axis, "index out of range");
            acc * self.points_per_axis + i
        })
    }

    pub fn center_node(&self) -> usize {
        self.node_at(&vec![self.points_per_axis / 2; self.dim()])
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.coords_into(node, &mut x);
        x
    }

    pub fn coords_into(&self, node: usize, x: &mut [f64]) {
        let m = self.points_per_axis;
        let half = (m / 2) as f64;
        let mut rest = node;
        for a in (0..self.dim()).rev() {
            let i = rest % m;
            rest /= m;
            x[a] = self.center[a] + (i as f64 - half) * self.spacing(a);
        }
    }

    /// Number of cells between the node and the nearest boundary face.
    pub fn cells_to_boundary(&self, node: usize) -> usize {
        let m = self.points_per_axis;
        let mut rest = node;
        let mut d = usize::MAX;
        for _ in 0..self.dim() {
            let i = rest % m;
            rest /= m;
            d = d.min(i.min(m - 1 - i));
        }
        d
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.cells_to_boundary(node) >= 1
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_interior(k)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_interior(k)).collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n == other.n
            && self.points_per_axis == other.points_per_axis
            && self.center == other.center
            && self.halfwidth == other.halfwidth
    }

    /// Centered second differences with step `cells`·h.
    pub fn real_hessian_with_step(&self, node: usize, cells: usize) -> Result<SymMatrix> {
        if cells == 0 || self.cells_to_boundary(node) < cells {
            return Err(Error::BoundaryTooClose);
        }
        let d = self.dim();
        let u = &self.values;
        let c = u[node];
        let mut hess = SymMatrix::zeros(d);
        for a in 0..d {
            let sa = cells * self.stride(a);
            let ha = cells as f64 * self.spacing(a);
            hess.set(a, a, (u[node + sa] - 2.0 * c + u[node - sa]) / (ha * ha));
            for b in (a + 1)..d {
                let sb = cells * self.stride(b);
                let hb = cells as f64 * self.spacing(b);
                let v = (u[node + sa + sb] - u[node + sa - sb] - u[node - sa + sb] + u[node - sa - sb])
                    / (4.0 * ha * hb);
                hess.set(a, b, v);
            }
        }
        Ok(hess)
    }

    /// Centered second-order real Hessian D²ₕu at a node.
    pub fn real_hessian(&self, node: usize) -> Result<SymMatrix> {
        self.real_hessian_with_step(node, 1)
    }

    /// Centered first differences.
    pub fn gradient(&self, node: usize) -> Result<Vec<f64>> {
        if !self.is_interior(node) {
            return Err(Error::BoundaryTooClose);
        }
        Ok((0..self.dim())
            .map(|a| {
                let s = self.stride(a);
                (self.values[node + s] - self.values[node - s]) / (2.0 * self.spacing(a))
            })
            .collect())
    }

    /// Discrete complex Hessian with entries 2u_{z_j z̄_k}, where
    /// u_{z_j z̄_k} = ¼[(u_{x_j x_k} + u_{y_j y_k}) + i(u_{x_j y_k} − u_{y_j x_k})].
    pub fn complex_hessian(&self, node: usize) -> Result<HermitianMatrix> {
        let d2 = self.real_hessian(node)?;
        Ok(complex_hessian_from_real(&d2))
    }

    /// Plain-text dump: header `n points_per_axis center… halfwidth…`, then one value per line.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(26 * (self.len() + 1));
        write!(out, "{} {}", self.n, self.points_per_axis).unwrap();
        for v in self.center.iter().chain(&self.halfwidth) {
            write!(out, " {}", format_f64(*v)).unwrap();
        }
        out.push('\n');
        for v in &self.values {
            out.push_str(&format_f64(*v));
            out.push('\n');
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidGrid(format!("field dump: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(bad("short header"));
        }
        let n: usize = tokens[0].parse().map_err(|_| bad("bad n"))?;
        let m: usize = tokens[1].parse().map_err(|_| bad("bad points_per_axis"))?;
        if tokens.len() != 2 + 4 * n {
            return Err(bad("header needs 2n center and 2n halfwidth entries"));
        }
        let floats: Vec<f64> = tokens[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad box entry")))
            .collect::<Result<_>>()?;
        let mut field = Self::new(n, m, floats[..2 * n].to_vec(), floats[2 * n..].to_vec())?;
        let values: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| bad("bad value")))
            .collect::<Result<_>>()?;
        if values.len() != field.len() {
            return Err(bad(&format!("expected {} values, found {}", field.len(), values.len())));
        }
        field.values = values;
        Ok(field)
    }
}

/// 17-significant-digit scientific rendering used by every text output.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Complex Hessian 2u_{z_j z̄_k} assembled from a real Hessian.
pub fn complex_hessian_from_real(d2: &SymMatrix) -> HermitianMatrix {
    let n = d2.dim() / 2;
    let re = DMatrix::from_fn(n, n, |j, k| 0.5 * (d2.get(j, k) + d2.get(n + j, n + k)));
    let im = DMatrix::from_fn(n, n, |j, k| 0.5 * (d2.get(j, n + k) - d2.get(n + j, k)));
    HermitianMatrix::new(re, im).expect("complex Hessian of a symmetric matrix is Hermitian")
}
