//! Dense column-major matrices and the norm primitives used by the solvers.
//!
//! Every factor in the toolkit (`X`, `W`, `H`) is a [`DenseMatrix`]. Storage is
//! column-major: columns of `H` and `X` are contiguous, which is what the
//! penalty term and residual loops walk over. Row access is strided.

use std::fmt;

use crate::error::{Error, Result};

/// Default relative tolerance for [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-9;
/// Default iteration cap for [`spectral_norm`].
pub const SPECTRAL_MAX_ITER: usize = 1000;

/// A real matrix stored in column-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(12) {
                write!(f, "{:>12.6} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from column-major data. Fails on length mismatch or
    /// non-finite values.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "DenseMatrix::from_col_major",
                rows * cols,
                data.len(),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEntry {
                row: pos % rows.max(1),
                col: pos / rows.max(1),
                value: data[pos],
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows. Panics on ragged
    /// input; intended for literals and tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(
            rows.iter().all(|r| r.as_ref().len() == n_cols),
            "ragged rows"
        );
        Self::from_fn(n_rows, n_cols, |i, j| rows[i].as_ref()[j])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = value;
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        Self::from_fn(keep.len(), self.cols, |i, j| self.get(keep[i], j))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entrywise minimum; `None` for an empty matrix.
    pub fn min_value(&self) -> Option<f64> {
        self.data.iter().copied().reduce(f64::min)
    }

    /// `C = A B`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                "matmul",
                format!("lhs cols {}", self.cols),
                format!("rhs rows {}", rhs.rows),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let b_col = rhs.col(j);
            let out_col = out.col_mut(j);
            for (k, &b) in b_col.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for (o, &a) in out_col.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `C = Aᵀ B` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::shape(
                "t_matmul",
                format!("lhs rows {}", self.rows),
                format!("rhs rows {}", rhs.rows),
            ));
        }
        Ok(DenseMatrix::from_fn(self.cols, rhs.cols, |i, j| {
            dot(self.col(i), rhs.col(j))
        }))
    }

    /// `C = A Bᵀ` without materializing the transpose.
    pub fn matmul_t(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.cols {
            return Err(Error::shape(
                "matmul_t",
                format!("lhs cols {}", self.cols),
                format!("rhs cols {}", rhs.cols),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.rows);
        for k in 0..self.cols {
            let a_col = self.col(k);
            let b_col = rhs.col(k);
            for (j, &b) in b_col.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for (o, &a) in out.col_mut(j).iter_mut().zip(a_col) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &DenseMatrix, context: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                context,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "add_scaled")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        self.map(|v| alpha * v)
    }

    pub fn frobenius_sq(&self) -> f64 {
        sum_sq(&self.data)
    }

    /// Squared Frobenius distance between two equally shaped matrices.
    pub fn distance_sq(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other, "distance_sq")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Euclidean norm of each row.
    pub fn row_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (a, v) in acc.iter_mut().zip(self.col(j)) {
                *a += v * v;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Sum of each column.
    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| self.col(j).iter().sum()).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sum_sq(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

/// `‖M‖_F`.
pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.frobenius_sq().sqrt()
}

/// Number of entries that are not exactly zero.
pub fn l0_norm(m: &DenseMatrix) -> usize {
    m.data.iter().filter(|v| **v != 0.0).count()
}

/// Number of rows with at least one non-zero entry.
pub fn l20_norm(m: &DenseMatrix) -> usize {
    let mut nonzero = vec![false; m.rows];
    for j in 0..m.cols {
        for (flag, v) in nonzero.iter_mut().zip(m.col(j)) {
            *flag |= *v != 0.0;
        }
    }
    nonzero.into_iter().filter(|b| *b).count()
}

/// Largest singular value by power iteration on the smaller Gram matrix,
/// started from the normalized all-ones vector.
///
/// Returns [`Error::NotConverged`] carrying the last estimate when the
/// relative change of the eigenvalue estimate is still above `tol` after
/// `max_iter` iterations.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spectral_norm tolerance must be positive, got {tol}"
        )));
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    // Iterate on MᵀM when it is the smaller Gram matrix, otherwise MMᵀ.
    let use_cols = m.cols <= m.rows;
    let dim = if use_cols { m.cols } else { m.rows };
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut lambda_prev = 0.0;
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let (u, w) = if use_cols {
            let u = mat_vec(m, &v);
            let w = mat_t_vec(m, &u);
            (u, w)
        } else {
            let u = mat_t_vec(m, &v);
            let w = mat_vec(m, &u);
            (u, w)
        };
        // Rayleigh quotient of the Gram matrix at the unit vector v.
        lambda = sum_sq(&u);
        let w_norm = sum_sq(&w).sqrt();
        if lambda == 0.0 || w_norm == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / w_norm;
        }
        if (lambda - lambda_prev).abs() <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        lambda_prev = lambda;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        estimate: lambda.sqrt(),
    })
}

/// [`spectral_norm`] with the default tolerance, accepting the last estimate
/// if the iteration cap is hit.
pub fn spectral_norm_estimate(m: &DenseMatrix) -> f64 {
    match spectral_norm(m, SPECTRAL_TOL, SPECTRAL_MAX_ITER) {
        Ok(v) => v,
        Err(Error::NotConverged { estimate, .. }) => {
            log::debug!("spectral norm hit the iteration cap, using estimate {estimate}");
            estimate
        }
        Err(e) => unreachable!("default spectral_norm arguments are valid: {e}"),
    }
}

fn mat_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows];
    for (j, &vj) in v.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(m.col(j)) {
            *o += a * vj;
        }
    }
    out
}

fn mat_t_vec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..m.cols).map(|j| dot(m.col(j), v)).collect()
}
