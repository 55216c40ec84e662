//! Small dense matrices over a generic [`Scalar`].
//!
//! Sizes here never exceed `2n × 2n` with `n ≤ 4`, so a row-major `Vec` and
//! naive loops are all that is needed. Eigen-decompositions on plain `f64`
//! go through `nalgebra`.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::ad::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> S>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[S], v: &[S]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).fold(S::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn map<T, F: Fn(S) -> T>(&self, f: F) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|x| x * s)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    /// Places `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Gauss-Jordan inverse with partial pivoting on the primal values.
    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| {
                    a[(r, col)]
                        .value()
                        .abs()
                        .total_cmp(&a[(s, col)].value().abs())
                })
                .expect("non-empty pivot range");
            if a[(pivot, col)].value().abs() < 1e-300 {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a[(col, col)].recip();
            for j in 0..n {
                a[(col, j)] = a[(col, j)] * d;
                inv[(col, j)] = inv[(col, j)] * d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                for j in 0..n {
                    a[(r, j)] = a[(r, j)] - f * a[(col, j)];
                    inv[(r, j)] = inv[(r, j)] - f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn values(&self) -> Mat<f64> {
        self.map(|x| x.value())
    }
}

impl Mat<f64> {
    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .to_nalgebra()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Real eigenvalues of a general matrix via the real Schur form, `None`
    /// when the spectrum has a complex pair.
    pub fn real_eigenvalues(&self) -> Option<Vec<f64>> {
        let mut ev: Vec<f64> = self.to_nalgebra().eigenvalues()?.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Some(ev)
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Inertia of a symmetric matrix: (positive, negative, zero) eigenvalue counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

pub fn signature(m: &Mat<f64>, zero_tol: f64) -> Signature {
    let ev = m.symmetric_eigenvalues();
    Signature {
        positive: ev.iter().filter(|&&e| e > zero_tol).count(),
        negative: ev.iter().filter(|&&e| e < -zero_tol).count(),
        zero: ev.iter().filter(|&&e| e.abs() <= zero_tol).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let m = Mat::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.2],
            vec![0.5, -0.2, 2.0],
        ]);
        let inv = m.inverse().unwrap();
        let err = m.matmul(&inv).sub(&Mat::identity(3)).max_abs();
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn inverse_needs_pivoting() {
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(m.inverse().unwrap(), m);
        let singular = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(singular.inverse(), Err(Error::Singular)));
    }

    #[test]
    fn signature_of_split_form() {
        let mut m = Mat::<f64>::zeros(4, 4);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 1.0;
        m[(2, 2)] = -1.0;
        m[(3, 3)] = -3.0;
        let s = signature(&m, 1e-12);
        assert_eq!((s.positive, s.negative, s.zero), (2, 2, 0));
    }

    #[test]
    fn swap_has_eigenvalues_plus_minus_one() {
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ev = m.real_eigenvalues().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }
}
