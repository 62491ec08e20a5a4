//! Small dense matrices for covariance bookkeeping.
//!
//! Exposure dimensions here are tiny (k is 1 in every parametric path), so a
//! flat row-major `Vec<f64>` beats pulling in a linear-algebra crate.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds from nested rows. Errors if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { nrows, ncols, data })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// 1x1 matrix, the common scalar-exposure case.
    pub fn scalar(value: f64) -> Self {
        Matrix {
            nrows: 1,
            ncols: 1,
            data: vec![value],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.ncols + j] = value;
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.nrows {
            for j in (i + 1)..self.ncols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// x' A x for square A.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert!(self.is_square() && x.len() == self.nrows);
        let mut acc = 0.0;
        for i in 0..self.nrows {
            let mut row = 0.0;
            for j in 0..self.ncols {
                row += self.get(i, j) * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// J A J' where self is k x k and `j` is m x k.
    pub fn sandwich(&self, j: &Matrix) -> Matrix {
        debug_assert!(self.is_square() && j.ncols == self.nrows);
        let m = j.nrows;
        let k = self.nrows;
        // tmp = J A  (m x k)
        let mut tmp = Matrix::zeros(m, k);
        for r in 0..m {
            for c in 0..k {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += j.get(r, t) * self.get(t, c);
                }
                tmp.set(r, c, acc);
            }
        }
        let mut out = Matrix::zeros(m, m);
        for r in 0..m {
            for c in 0..m {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += tmp.get(r, t) * j.get(c, t);
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    /// Positive semi-definiteness up to `tol`, via Cholesky on A + tol*I.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.nrows;
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                if i == j {
                    sum += tol;
                }
                for t in 0..j {
                    sum -= l[i * n + t] * l[j * n + t];
                }
                if i == j {
                    if sum < 0.0 {
                        return false;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    let d = l[j * n + j];
                    l[i * n + j] = if d > 0.0 { sum / d } else { 0.0 };
                }
            }
        }
        true
    }
}
