//! Compressed-row matrices and the Krylov solvers used by the Newton loop.
//!
//! Reductions (dot products, norms) run sequentially so results are
//! bit-reproducible regardless of the thread count; only row-wise kernels are
//! parallel.

use rayon::prelude::*;

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from per-row (column, value) lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec(x, &mut y);
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Zero-fill incomplete LU factorization sharing the sparsity of the input.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    /// Returns `None` when a zero pivot is met.
    pub fn new(a: &CsrMatrix) -> Option<Self> {
        let mut lu = a.clone();
        let n = lu.nrows();
        let mut diag_pos = vec![usize::MAX; n];
        for (i, d) in diag_pos.iter_mut().enumerate() {
            let (s, e) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            *d = s + lu.col_idx[s..e].binary_search(&i).ok()?;
        }
        // column -> position map for the current row
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in s..e {
                pos[lu.col_idx[k]] = k;
            }
            for k in s..e {
                let col = lu.col_idx[k];
                if col >= i {
                    break;
                }
                let pivot = lu.values[diag_pos[col]];
                if pivot == 0.0 {
                    return None;
                }
                let factor = lu.values[k] / pivot;
                lu.values[k] = factor;
                for kk in (diag_pos[col] + 1)..lu.row_ptr[col + 1] {
                    let j = lu.col_idx[kk];
                    let p = pos[j];
                    if p != usize::MAX {
                        lu.values[p] -= factor * lu.values[kk];
                    }
                }
            }
            if lu.values[diag_pos[i]] == 0.0 {
                return None;
            }
            for k in s..e {
                pos[lu.col_idx[k]] = usize::MAX;
            }
        }
        Some(Self { lu, diag_pos })
    }

    /// Solves (LU) z = r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.nrows();
        for i in 0..n {
            let mut s = r[i];
            for k in self.lu.row_ptr[i]..self.diag_pos[i] {
                s -= self.lu.values[k] * z[self.lu.col_idx[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (self.diag_pos[i] + 1)..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[k] * z[self.lu.col_idx[k]];
            }
            z[i] = s / self.lu.values[self.diag_pos[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt and Givens rotations.
///
/// Stops when ‖b − Ax‖ ≤ `tol`·‖b‖ (true residual, checked at each restart).
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: Option<&Ilu0>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, LinearSolveReport) {
    let n = a.nrows();
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return (
            x,
            LinearSolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let apply_m = |v: &[f64], out: &mut [f64]| match precond {
        Some(p) => p.apply(v, out),
        None => out.copy_from_slice(v),
    };
    let mut total = 0;
    let mut r = b.to_vec();
    let mut rel;
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    while total < max_iter {
        let beta = norm2(&r);
        rel = beta / b_norm;
        if rel <= tol {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            apply_m(&basis[k], &mut tmp);
            a.matvec(&tmp, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let h = dot(&w, vj);
                hess[j][k] = h;
                w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= h * vi);
            }
            let h_next = norm2(&w);
            hess[k + 1][k] = h_next;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if (g[k + 1].abs() / b_norm) <= tol * 0.5 || h_next == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        if k_used == 0 {
            break;
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[j]).for_each(|(u, v)| *u += yj * v);
        }
        apply_m(&update, &mut tmp);
        x.iter_mut().zip(&tmp).for_each(|(xi, t)| *xi += t);
        a.matvec(&x, &mut w);
        r.iter_mut().zip(b.iter().zip(&w)).for_each(|(ri, (bi, wi))| *ri = bi - wi);
    }
    rel = norm2(&r) / b_norm;
    (
        x,
        LinearSolveReport {
            iterations: total,
            relative_residual: rel,
            converged: rel <= tol,
        },
    )
}

/// Conjugate gradients for symmetric positive-definite systems, Jacobi-preconditioned.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, LinearSolveReport) {
    let n = a.nrows();
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / a.get(i, i)).collect();
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return (
            x,
            LinearSolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rel;
    while iterations < max_iter {
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            break;
        }
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        z.iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(zi, (ri, di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        iterations += 1;
    }
    rel = norm2(&r) / b_norm;
    (
        x,
        LinearSolveReport {
            iterations,
            relative_residual: rel,
            converged: rel <= tol,
        },
    )
}
