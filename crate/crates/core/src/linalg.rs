//! Small dense linear-algebra helpers: a column-major matrix, vector
//! kernels, and a Cholesky factorization.

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Dense column-major matrix. In this crate the rows are edges and the
/// columns are scenarios, so a column is one scenario's flow or price vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self { rows, cols: columns.len(), data }
    }

    /// Matrix whose every column is `v`.
    pub fn repeat_column(v: &[T], cols: usize) -> Self {
        let mut data = Vec::with_capacity(v.len() * cols);
        for _ in 0..cols {
            data.extend_from_slice(v);
        }
        Self { rows: v.len(), cols, data }
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
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks(self.rows.max(1)).take(self.cols)
    }

    pub fn row(&self, r: usize) -> Vec<T> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_columns(self) -> Vec<Vec<T>> {
        self.columns().map(|c| c.to_vec()).collect()
    }

    /// Row-wise maximum (the reservation implied by a flow matrix).
    pub fn row_max(&self) -> Vec<T> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self.get(r, c))
                    .fold(T::neg_infinity(), T::max)
            })
            .collect()
    }

    /// Row-wise sums.
    pub fn row_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        for col in self.columns() {
            for (o, &v) in out.iter_mut().zip(col) {
                *o += v;
            }
        }
        out
    }

    /// Frobenius norm of `self - other`.
    pub fn dist_frobenius(&self, other: &Self) -> T {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    /// Elementwise sum of `self ∘ other`.
    pub fn inner(&self, other: &Self) -> T {
        assert_eq!(self.data.len(), other.data.len());
        dot(&self.data, &other.data)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

#[inline]
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Dense lower-triangular Cholesky factor of a symmetric positive definite
/// matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    // row-major lower triangle, full storage
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors the row-major `n×n` matrix `a`. Returns `None` when a pivot
    /// falls below `pivot_tol` times the largest diagonal entry.
    pub fn factor(mut a: Vec<T>, n: usize, pivot_tol: T) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let scale = (0..n).map(|i| a[i * n + i]).fold(T::zero(), T::max);
        let floor = pivot_tol * scale.max(T::min_positive_value());
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > floor) {
                return None;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        Some(Self { n, l: a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s = b[i] - dot(row, &b[..i]);
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = vec![4.0, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0];
        let chol = Cholesky::factor(a.clone(), 3, 1e-12).unwrap();
        let mut x = vec![1.0, 2.0, 3.0];
        chol.solve_in_place(&mut x);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = vec![1.0, -1.0, -1.0, 1.0];
        assert!(Cholesky::factor(a, 2, 1e-12).is_none());
    }

    #[test]
    fn row_max_and_sums() {
        let m = Mat::from_columns(2, &[vec![1.0, 5.0], vec![3.0, 2.0]]);
        assert_eq!(m.row_max(), vec![3.0, 5.0]);
        assert_eq!(m.row_sums(), vec![4.0, 7.0]);
        assert_eq!(m.get(1, 0), 5.0);
    }
}
