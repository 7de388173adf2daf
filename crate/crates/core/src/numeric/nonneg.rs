use std::fmt;

use serde::{Deserialize, Serialize};

use super::rounding::{add_up, mul_up_nonneg, sum_up};
use super::{NumericError, Result};

/// Matrix of nonnegative upper bounds, every entry rounded upward.
///
/// `+inf` is admitted and means "unbounded"; by convention `0 * inf = 0`,
/// so a structurally absent path never picks up an unbounded quantity.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NonnegMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        NonnegMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NumericError::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(bad) = data.iter().find(|x| x.is_nan() || **x < 0.0) {
            return Err(NumericError::DimensionMismatch(format!("entry {bad} is not a nonnegative bound")));
        }
        Ok(NonnegMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NumericError::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Column vector.
    pub fn column(v: &[f64]) -> Result<Self> {
        Self::from_vec(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Sets an entry; negative or NaN values are a programming error.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(v >= 0.0, "bound entries must be nonnegative, got {v}");
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Upward-rounded product.
    pub fn mul(&self, rhs: &NonnegMatrix) -> NonnegMatrix {
        assert_eq!(self.cols, rhs.rows, "nonneg matrix product dimensions");
        let mut out = NonnegMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                out.data[i * rhs.cols + j] = sum_up((0..self.cols).map(|k| mul_up_nonneg(self.get(i, k), rhs.get(k, j))));
            }
        }
        out
    }

    /// Upward-rounded product with a vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "nonneg matrix-vector dimensions");
        (0..self.rows).map(|i| sum_up(self.row(i).iter().zip(v).map(|(&a, &b)| mul_up_nonneg(a, b)))).collect()
    }

    /// Upward-rounded sum.
    pub fn add(&self, rhs: &NonnegMatrix) -> NonnegMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "nonneg matrix sum dimensions");
        NonnegMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| add_up(a, b)).collect(),
        }
    }

    /// Upward-rounded multiplication by a nonnegative scalar.
    pub fn scale(&self, k: f64) -> NonnegMatrix {
        assert!(k >= 0.0);
        NonnegMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| mul_up_nonneg(a, k)).collect() }
    }

    pub fn block_diag(&self, rhs: &NonnegMatrix) -> NonnegMatrix {
        let mut out = NonnegMatrix::zeros(self.rows + rhs.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
        }
        for i in 0..rhs.rows {
            for j in 0..rhs.cols {
                out.set(self.rows + i, self.cols + j, rhs.get(i, j));
            }
        }
        out
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hcat(&self, rhs: &NonnegMatrix) -> NonnegMatrix {
        assert_eq!(self.rows, rhs.rows, "hcat row counts");
        let mut out = NonnegMatrix::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..rhs.cols {
                out.set(i, self.cols + j, rhs.get(i, j));
            }
        }
        out
    }

    /// Columns `start..end`.
    pub fn columns(&self, start: usize, end: usize) -> NonnegMatrix {
        let mut out = NonnegMatrix::zeros(self.rows, end - start);
        for i in 0..self.rows {
            for j in start..end {
                out.set(i, j - start, self.get(i, j));
            }
        }
        out
    }

    /// Rows `start..end`.
    pub fn select_rows(&self, start: usize, end: usize) -> NonnegMatrix {
        NonnegMatrix { rows: end - start, cols: self.cols, data: self.data[start * self.cols..end * self.cols].to_vec() }
    }

    /// Upward-rounded row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| sum_up(self.row(i).iter().copied())).collect()
    }
}

/// Norm subordinate to the sup norm on vectors: the largest row sum,
/// rounded upward.
pub fn subordinate_inf_norm(m: &NonnegMatrix) -> f64 {
    m.row_sums().into_iter().fold(0.0, f64::max)
}

impl fmt::Debug for NonnegMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        write!(f, "NonnegMatrix{rows:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inf_norm_examples() {
        let m = NonnegMatrix::from_rows(&[vec![0.5, 0.25], vec![0.1, 0.2]]).unwrap();
        assert_eq!(subordinate_inf_norm(&m), 0.75);
        assert_eq!(subordinate_inf_norm(&NonnegMatrix::zeros(3, 2)), 0.0);
        let one = NonnegMatrix::from_rows(&[vec![0.3]]).unwrap();
        assert_eq!(subordinate_inf_norm(&one), 0.3);
    }

    #[test]
    fn zero_annihilates_infinity() {
        let m = NonnegMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.mul_vec(&[f64::INFINITY, 2.0]), vec![2.0]);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(NonnegMatrix::from_rows(&[vec![-1.0]]).is_err());
        assert!(NonnegMatrix::from_vec(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn block_bookkeeping() {
        let a = NonnegMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = NonnegMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let d = a.block_diag(&b);
        assert_eq!((d.rows(), d.cols()), (3, 3));
        assert_eq!(d.row(2), &[0.0, 0.0, 4.0]);
        assert_eq!(a.hcat(&a).row(0), &[1.0, 2.0, 1.0, 2.0]);
        assert_eq!(a.mul(&NonnegMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap()).get(0, 0), 3.0);
    }
}
