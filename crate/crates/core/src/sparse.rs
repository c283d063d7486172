//! Compressed sparse row storage and a Jacobi preconditioned conjugate gradient.
use crate::error::{Error, Result};

/// Symmetric matrix in CSR layout with the full pattern stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Build from `(row, col, value)` triplets, summing duplicates. Fails if
    /// the result is not symmetric to `1e-14` (relative to the largest entry).
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: i.max(j) + 1,
                });
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let m = SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        };
        m.check_symmetry(1e-14)?;
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        SparseSymMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }

    fn check_symmetry(&self, rel_tol: f64) -> Result<()> {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let diff = (v - self.get(j, i)).abs();
                if diff > rel_tol * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, diff });
                }
            }
        }
        Ok(())
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }
}

/// Diagonal matrix with strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagMatrix {
    diag: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "diagonal entry {i} is not positive ({})",
                diag[i]
            )));
        }
        Ok(DiagMatrix { diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.diag.len(), x.len())?;
        Ok(self.diag.iter().zip(x).map(|(d, v)| d * v).collect())
    }
}

/// Symmetric positive definite operator usable by [`cg_solve`].
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = B x`, with `x` and `y` of length `dim()`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y)
    }
    fn diagonal(&self) -> Vec<f64> {
        SparseSymMatrix::diagonal(self)
    }
}

impl LinearOperator for DiagMatrix {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, d), xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
    }
    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}

/// Matrix-free `B = W + c A`.
pub struct Composite<'a> {
    pub mass: &'a dyn LinearOperator,
    pub stiffness: &'a SparseSymMatrix,
    pub c: f64,
}

impl LinearOperator for Composite<'_> {
    fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.mass.apply_into(x, y);
        let c = self.c;
        let a = self.stiffness;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                acc += a.values[k] * x[a.col_idx[k]];
            }
            *yi += c * acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.mass
            .diagonal()
            .iter()
            .zip(self.stiffness.diagonal())
            .map(|(m, a)| m + self.c * a)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub tol: f64,
    /// `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-12,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solve `B x = b` from a zero initial guess.
pub fn cg_solve(op: &dyn LinearOperator, b: &[f64], opts: CgOptions) -> Result<Vec<f64>> {
    let mut x = vec![0.0; op.dim()];
    cg_solve_in_place(op, b, &mut x, opts)?;
    Ok(x)
}

/// Jacobi preconditioned CG starting from the contents of `x`. Terminates once
/// `||b - B x||_2 <= tol ||b||_2`.
pub fn cg_solve_in_place(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgStats> {
    let n = op.dim();
    check_len(n, b.len())?;
    check_len(n, x.len())?;
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut r = op.apply(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut res = norm2(&r) / b_norm;
    if res <= opts.tol {
        return Ok(CgStats {
            iterations: 0,
            relative_residual: res,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];

    for it in 1..=max_iter {
        op.apply_into(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = norm2(&r) / b_norm;
        if res <= opts.tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
