//! Small dense linear algebra for symmetric positive-definite matrices.
//!
//! Everything here is sized for `p <= 10`: row-major `Vec<f64>` storage,
//! a Cholesky factorization that carries its own log-determinant, and
//! triangular solves for quadratic forms, plus Householder QR leverages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative pivot threshold for declaring a matrix numerically singular.
pub const PIVOT_EPS: f64 = 1e-12;

/// Relative asymmetry accepted by [`spd_factorize`].
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (|a[{row},{col}] - a[{col},{row}]| too large)")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
}

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::DimensionMismatch { expected: 1, found: 0 });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
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
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl SpdFactorization {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `log |M|`, equal to `2 Σ log L_ii`.
    #[inline]
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn factor(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.lower.clone(),
        }
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.l(i, k) * self.l(j, k)).sum();
                m.set(i, j, s);
                m.set(j, i, s);
            }
        }
        m
    }

    /// Solves `L y = v` in place.
    fn forward(&self, y: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
    }

    /// Solves `Lᵀ x = y` in place.
    fn backward(&self, x: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l(k, i) * x[k];
            }
            x[i] = s / self.l(i, i);
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), LinalgError> {
        if v.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `L v`, mapping standard coordinates into the factored metric.
    pub fn lower_mul(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.check_dim(v)?;
        Ok((0..self.dim)
            .map(|i| (0..=i).map(|k| self.l(i, k) * v[k]).sum())
            .collect())
    }

    /// `L⁻¹ v`.
    pub fn whiten(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.check_dim(v)?;
        let mut y = v.to_vec();
        self.forward(&mut y);
        Ok(y)
    }

    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.check_dim(v)?;
        let mut x = v.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    /// `vᵀ M⁻¹ v`, computed as `‖L⁻¹ v‖²` so the result is never negative.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64, LinalgError> {
        let y = self.whiten(v)?;
        Ok(dot(&y, &y))
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// A pivot at or below `PIVOT_EPS * trace / dim` is reported as
/// [`LinalgError::NotPositiveDefinite`].
pub fn spd_factorize(m: &Matrix) -> Result<SpdFactorization, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let sym_tol = SYMMETRY_TOL * m.max_abs();
    for i in 0..n {
        for j in 0..i {
            if (m.get(i, j) - m.get(j, i)).abs() > sym_tol {
                return Err(LinalgError::NotSymmetric { row: i, col: j });
            }
        }
    }
    let threshold = PIVOT_EPS * m.trace() / n as f64;

    let mut lower = vec![0.0; n * n];
    let mut log_det = 0.0;
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= lower[j * n + k] * lower[j * n + k];
        }
        if !(pivot > threshold) || !(pivot > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let ljj = pivot.sqrt();
        lower[j * n + j] = ljj;
        log_det += 2.0 * ljj.ln();
        for i in j + 1..n {
            // Lower triangle only; symmetry was checked above.
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            lower[i * n + j] = s / ljj;
        }
    }
    Ok(SpdFactorization { dim: n, lower, log_det })
}

/// Diagonal of the hat matrix `Z (ZᵀZ)⁻¹ Zᵀ` and `log |ZᵀZ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Leverages {
    pub values: Vec<f64>,
    pub log_det: f64,
}

/// Leverages of the rows of a tall matrix `Z` (`rows >= cols`) by Householder QR.
///
/// Working from `Z` rather than `ZᵀZ` keeps each value within a few ulps of
/// `[0, 1]` even when `ZᵀZ` is badly conditioned. The singularity test matches
/// [`spd_factorize`] applied to `ZᵀZ`: `R_jj²` is the `j`-th Cholesky pivot.
pub fn leverages(z: &Matrix) -> Result<Leverages, LinalgError> {
    let (n, p) = (z.rows, z.cols);
    if n < p {
        return Err(LinalgError::DimensionMismatch { expected: p, found: n });
    }
    let threshold = PIVOT_EPS * z.data.iter().map(|v| v * v).sum::<f64>() / p as f64;
    let mut a = z.data.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut log_det = 0.0;
    for k in 0..p {
        let norm = (k..n).map(|i| a[i * p + k].powi(2)).sum::<f64>().sqrt();
        if !(norm * norm > threshold) {
            return Err(LinalgError::NotPositiveDefinite {
                pivot: k,
                value: norm * norm,
            });
        }
        log_det += 2.0 * norm.ln();
        let alpha = if a[k * p + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[i * p + k]).collect();
        v[0] -= alpha;
        let vn = norm2(&v);
        for x in v.iter_mut() {
            *x /= vn;
        }
        for j in k..p {
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * a[(k + t) * p + j]).sum();
            for (t, vt) in v.iter().enumerate() {
                a[(k + t) * p + j] -= 2.0 * s * vt;
            }
        }
        reflectors.push(v);
    }
    // Thin Q = H_1 ... H_p [I_p; 0].
    let mut q = vec![0.0; n * p];
    for j in 0..p {
        q[j * p + j] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..p {
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * q[(k + t) * p + j]).sum();
            for (t, vt) in v.iter().enumerate() {
                q[(k + t) * p + j] -= 2.0 * s * vt;
            }
        }
    }
    let values = q.chunks_exact(p).map(|row| dot(row, row)).collect();
    Ok(Leverages { values, log_det })
}
