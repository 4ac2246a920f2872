use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{LinalgError, Matrix};

/// `n` observations in `R^p`, one per row, with `n > p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct Sample {
    data: Matrix,
}

impl Sample {
    pub fn from_matrix(data: Matrix) -> Result<Self> {
        if data.rows() <= data.cols() {
            return Err(Error::InvalidSample(format!(
                "need more observations than dimensions (n = {}, p = {})",
                data.rows(),
                data.cols()
            )));
        }
        Ok(Self { data })
    }

    /// Builds a sample from row-major data of dimension `p`.
    pub fn new(p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 || !data.len().is_multiple_of(p) {
            return Err(Error::InvalidSample(format!(
                "{} values cannot be split into rows of length {p}",
                data.len()
            )));
        }
        let n = data.len() / p;
        Self::from_matrix(Matrix::new(n, p, data).map_err(sample_error)?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows).map_err(sample_error)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.data.rows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.data.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.as_slice().chunks_exact(self.p())
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.p()];
        for x in self.rows() {
            for (s, v) in sum.iter_mut().zip(x) {
                *s += v;
            }
        }
        let n = self.n() as f64;
        sum.iter().map(|s| s / n).collect()
    }

    /// Unnormalized scatter `Σ_i (X_i - c)(X_i - c)ᵀ`.
    pub fn scatter_about(&self, center: &[f64]) -> Matrix {
        let p = self.p();
        let mut s = Matrix::zeros(p, p);
        let mut diff = vec![0.0; p];
        for x in self.rows() {
            for ((d, xi), ci) in diff.iter_mut().zip(x).zip(center) {
                *d = xi - ci;
            }
            for a in 0..p {
                for b in a..p {
                    s.set(a, b, s.get(a, b) + diff[a] * diff[b]);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                s.set(a, b, s.get(b, a));
            }
        }
        s
    }

    /// The sample `{B X_i + b}`.
    pub fn transformed(&self, b: &Matrix, shift: &[f64]) -> Result<Self> {
        let p = self.p();
        if b.rows() != p || b.cols() != p || shift.len() != p {
            return Err(Error::InvalidSample(format!(
                "affine map must be {p}x{p} with a shift of length {p}"
            )));
        }
        let mut out = Vec::with_capacity(self.n() * p);
        for x in self.rows() {
            let y = b.mul_vec(x)?;
            out.extend(y.iter().zip(shift).map(|(v, s)| v + s));
        }
        Self::new(p, out)
    }
}

fn sample_error(e: LinalgError) -> Error {
    match e {
        LinalgError::NonFinite => Error::InvalidSample("non-finite entry".into()),
        other => Error::InvalidSample(other.to_string()),
    }
}

impl TryFrom<Matrix> for Sample {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        Self::from_matrix(m)
    }
}

impl From<Sample> for Matrix {
    fn from(s: Sample) -> Matrix {
        s.data
    }
}
