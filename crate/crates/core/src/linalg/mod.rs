//! Dense complex matrices and the structured generators the codebook and
//! channel layers are assembled from.
//!
//! Storage is column-major throughout, so [`vec`] is a copy of the backing
//! buffer and [`unvec`] is its exact inverse. Dense products are delegated to
//! `faer` with sequential execution, which keeps results independent of the
//! host's thread count.

mod factor;
mod structured;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;
use thiserror::Error;

pub use factor::{haar_qr_phase_corrected, HermitianFactor, CONDITION_LIMIT};
pub use structured::{
    circshift, dft_matrix, hadamard_matrix, hadamard_product, is_scaled_unitary, kron, scaled_unitary_violation, unvec,
    vec, DEFAULT_TOL,
};

/// Shorthand for the complex zero.
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
/// Shorthand for the complex one.
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch, {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("no Sylvester Hadamard matrix of order {0}")]
    UnsupportedOrder(usize),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is numerically rank deficient (condition estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },
}

/// Dense complex matrix in column-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Takes ownership of a column-major buffer.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        if data.len() != rows * cols {
            return Err(LinalgError::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from entries listed row by row, which reads naturally
    /// in tests.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::LengthMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self::from_fn(rows, cols, |i, j| entries[i * cols + j]))
    }

    /// Real-valued convenience constructor, rows listed top to bottom.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn column_vector(entries: &[Complex64]) -> Self {
        Self::from_fn(entries.len(), 1, |i, _| entries[i])
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

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column-major backing buffer.
    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Copy of the contiguous column range `start..start + count`.
    pub fn columns(&self, start: usize, count: usize) -> CMatrix {
        assert!(start + count <= self.cols, "column range out of bounds");
        CMatrix {
            rows: self.rows,
            cols: count,
            data: self.data[start * self.rows..(start + count) * self.rows].to_vec(),
        }
    }

    /// Copy of the contiguous row range `start..start + count`.
    pub fn row_block(&self, start: usize, count: usize) -> CMatrix {
        assert!(start + count <= self.rows, "row range out of bounds");
        CMatrix::from_fn(count, self.cols, |i, j| self[(start + i, j)])
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Dense product `self * rhs`.
    ///
    /// Panics when the inner dimensions disagree.
    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols,
            rhs.rows,
            "matmul: {:?} * {:?} is not conformable",
            self.shape(),
            rhs.shape()
        );
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        matmul(
            out.as_faer_mut(),
            Accum::Replace,
            self.as_faer(),
            rhs.as_faer(),
            ONE,
            Par::Seq,
        );
        out
    }

    /// `self^H * rhs` without materializing the adjoint.
    pub fn adjoint_matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, rhs.rows, "adjoint_matmul: row counts differ");
        let mut out = CMatrix::zeros(self.cols, rhs.cols);
        matmul(
            out.as_faer_mut(),
            Accum::Replace,
            self.as_faer().adjoint(),
            rhs.as_faer(),
            ONE,
            Par::Seq,
        );
        out
    }

    /// `self * rhs^H` without materializing the adjoint.
    pub fn matmul_adjoint(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.cols, "matmul_adjoint: column counts differ");
        let mut out = CMatrix::zeros(self.rows, rhs.rows);
        matmul(
            out.as_faer_mut(),
            Accum::Replace,
            self.as_faer(),
            rhs.as_faer().adjoint(),
            ONE,
            Par::Seq,
        );
        out
    }

    /// Block-diagonal matrix with the given blocks along the diagonal.
    pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for j in 0..b.cols {
                for i in 0..b.rows {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub(crate) fn as_faer(&self) -> MatRef<'_, Complex64> {
        MatRef::from_column_major_slice(&self.data, self.rows, self.cols)
    }

    pub(crate) fn as_faer_mut(&mut self) -> MatMut<'_, Complex64> {
        MatMut::from_column_major_slice_mut(&mut self.data, self.rows, self.cols)
    }

    pub(crate) fn from_faer(m: MatRef<'_, Complex64>) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn row_major_constructor_and_indexing_agree() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(m[(0, 1)], c(2.0, 0.0));
        assert_eq!(m[(1, 0)], c(3.0, 0.0));
        assert_eq!(m.as_slice(), &[c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = CMatrix::from_row_major(2, 2, &[c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let b = CMatrix::from_row_major(2, 1, &[c(2.0, 0.0), c(0.0, 1.0)]).unwrap();
        let p = a.matmul(&b);
        // [ (1+i)2 + 2i*i, 3*2 - i ]
        assert_eq!(p[(0, 0)], c(0.0, 2.0));
        assert_eq!(p[(1, 0)], c(6.0, -1.0));
    }

    #[test]
    fn adjoint_products_match_explicit_adjoint() {
        let a = CMatrix::from_fn(3, 2, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, 4, |i, j| c((i * j) as f64, 1.0 - i as f64));
        assert!(a.adjoint_matmul(&b).max_abs_diff(&a.adjoint().matmul(&b)) < 1e-14);
        let d = CMatrix::from_fn(4, 2, |i, j| c(j as f64, i as f64));
        assert!(a.matmul_adjoint(&d).max_abs_diff(&a.matmul(&d.adjoint())) < 1e-14);
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = CMatrix::from_real_rows(&[&[1.0]]);
        let b = CMatrix::from_real_rows(&[&[2.0, 3.0], &[4.0, 5.0]]);
        let d = CMatrix::block_diag(&[a, b]);
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(0, 0)], c(1.0, 0.0));
        assert_eq!(d[(2, 1)], c(4.0, 0.0));
        assert_eq!(d[(0, 2)], ZERO);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let err = CMatrix::from_column_major(2, 2, vec![ONE; 3]).unwrap_err();
        assert_eq!(err, LinalgError::LengthMismatch { expected: 4, found: 3 });
    }
}
