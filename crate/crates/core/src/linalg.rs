//! Small dense complex matrices.
//!
//! Channel matrices here are at most a few hundred entries, so a flat
//! row-major `Vec` with hand-written kernels beats pulling in a general
//! linear-algebra backend. Only what the simulator needs is provided:
//! products, row-block extraction, norms and a Cholesky log-determinant.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Real-valued matrix from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Complex::new(T::lit(v), T::zero())).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `count` consecutive rows starting at `start`.
    pub fn row_block(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.rows {
            return Err(Error::Dimension(format!(
                "rows {start}..{} out of range for {} rows",
                start + count,
                self.rows
            )));
        }
        Ok(Self {
            rows: count,
            cols: self.cols,
            data: self.data[start * self.cols..(start + count) * self.cols].to_vec(),
        })
    }

    /// Splits a tall matrix into stacked blocks of `block_rows` rows each.
    pub fn split_rows(&self, block_rows: usize) -> Result<Vec<Self>> {
        if block_rows == 0 || self.rows % block_rows != 0 {
            return Err(Error::Dimension(format!(
                "{} rows do not split into blocks of {block_rows}",
                self.rows
            )));
        }
        (0..self.rows / block_rows)
            .map(|b| self.row_block(b * block_rows, block_rows))
            .collect()
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[Self]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack column mismatch".into()));
        }
        Ok(Self {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            data: blocks.iter().flat_map(|b| b.data.iter().copied()).collect(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.scale(s)).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self * x` into `out`. Lengths are checked by the caller.
    #[inline]
    pub fn mul_vec_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (h, v) in self.row(i).iter().zip(x) {
                acc += *h * *v;
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.rows];
        self.mul_vec_into(x, &mut out);
        Ok(out)
    }

    /// ‖self · x‖² without allocating.
    #[inline]
    pub fn image_norm_sqr(&self, x: &[Complex<T>]) -> T {
        debug_assert_eq!(x.len(), self.cols);
        let mut total = T::zero();
        for i in 0..self.rows {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (h, v) in self.row(i).iter().zip(x) {
                acc += *h * *v;
            }
            total += acc.norm_sqr();
        }
        total
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sqr(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// log2 det(I + s · A Aᴴ), evaluated on the smaller Gram side.
    pub fn log2_det_identity_plus_gram(&self, s: T) -> Result<T> {
        let gram = if self.rows <= self.cols {
            self.matmul(&self.adjoint())?
        } else {
            self.adjoint().matmul(self)?
        };
        let mut m = gram.scale(s);
        for i in 0..m.rows {
            m[(i, i)] += Complex::new(T::one(), T::zero());
        }
        m.log2_det_hpd()
    }

    /// log2 of the determinant of a Hermitian positive-definite matrix via Cholesky.
    pub fn log2_det_hpd(&self) -> Result<T> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "determinant of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        let mut log_det = T::zero();
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex::new(ljj, T::zero());
            log_det += ljj.log2();
            for i in j + 1..n {
                let mut acc = self[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc.unscale(ljj);
            }
        }
        Ok(log_det + log_det)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}
