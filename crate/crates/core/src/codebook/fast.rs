//! Products with `X ⊗ Phibar` that never form the `G*Mbar^2`-square matrix.
//!
//! With `Phibar[(i, k), (m, n)] = Z2[i, m] * Z1[k, (i - n) mod Mbar]`
//! (row `i*Mbar + k`, column `m*Mbar + n`), a product with `Phibar` costs
//! `2 R Mbar^3` instead of `R Mbar^4`, and the group base `X` is mixed in
//! afterwards at `R Mbar^2 G^2`.

use num_complex::Complex64;

use super::KroneckerFactors;
use crate::linalg::{CMatrix, ZERO};

impl KroneckerFactors {
    fn m_bar(&self) -> usize {
        self.z1.rows()
    }

    /// `a * (X ⊗ Phibar)`.
    pub fn right_multiply(&self, a: &CMatrix) -> CMatrix {
        let len = self.phibar.rows();
        let g = self.x.rows();
        assert_eq!(a.cols(), g * len, "right_multiply: column count mismatch");
        let per_group: Vec<CMatrix> = (0..g).map(|gi| self.phibar_right(&a.columns(gi * len, len))).collect();
        mix_groups(&per_group, a.rows(), len, |out_g, in_g| self.x[(in_g, out_g)])
    }

    /// `a * (X ⊗ Phibar)^H`.
    pub fn right_multiply_adjoint(&self, a: &CMatrix) -> CMatrix {
        let len = self.phibar.rows();
        let g = self.x.rows();
        assert_eq!(a.cols(), g * len, "right_multiply_adjoint: column count mismatch");
        let per_group: Vec<CMatrix> = (0..g)
            .map(|gi| self.phibar_right_adjoint(&a.columns(gi * len, len)))
            .collect();
        mix_groups(&per_group, a.rows(), len, |out_g, in_g| self.x[(out_g, in_g)].conj())
    }

    // b * Phibar
    fn phibar_right(&self, b: &CMatrix) -> CMatrix {
        let mb = self.m_bar();
        let rows = b.rows();
        // stage[:, i*mb + c] = sum_k b[:, i*mb + k] * Z1[k, c]
        let mut stage = CMatrix::zeros(rows, mb * mb);
        for i in 0..mb {
            for c in 0..mb {
                let dst = stage.column_mut(i * mb + c);
                for k in 0..mb {
                    axpy(dst, self.z1[(k, c)], b.column(i * mb + k));
                }
            }
        }
        // out[:, m*mb + n] = sum_i Z2[i, m] * stage[:, i*mb + (i - n) mod mb]
        let mut out = CMatrix::zeros(rows, mb * mb);
        for m in 0..mb {
            for n in 0..mb {
                let dst = out.column_mut(m * mb + n);
                for i in 0..mb {
                    let c = (i + mb - n) % mb;
                    axpy(dst, self.z2[(i, m)], stage.column(i * mb + c));
                }
            }
        }
        out
    }

    // b * Phibar^H
    fn phibar_right_adjoint(&self, b: &CMatrix) -> CMatrix {
        let mb = self.m_bar();
        let rows = b.rows();
        // stage[:, i*mb + n] = sum_m b[:, m*mb + n] * conj(Z2[i, m])
        let mut stage = CMatrix::zeros(rows, mb * mb);
        for i in 0..mb {
            for n in 0..mb {
                let dst = stage.column_mut(i * mb + n);
                for m in 0..mb {
                    axpy(dst, self.z2[(i, m)].conj(), b.column(m * mb + n));
                }
            }
        }
        // out[:, i*mb + k] = sum_c stage[:, i*mb + (i - c) mod mb] * conj(Z1[k, c])
        let mut out = CMatrix::zeros(rows, mb * mb);
        for i in 0..mb {
            for k in 0..mb {
                let dst = out.column_mut(i * mb + k);
                for c in 0..mb {
                    let n = (i + mb - c) % mb;
                    axpy(dst, self.z1[(k, c)].conj(), stage.column(i * mb + n));
                }
            }
        }
        out
    }
}

/// Block `out_g` of the result is `sum_in coeff(out_g, in_g) * per_group[in_g]`.
fn mix_groups(per_group: &[CMatrix], rows: usize, len: usize, coeff: impl Fn(usize, usize) -> Complex64) -> CMatrix {
    let g = per_group.len();
    let mut out = CMatrix::zeros(rows, g * len);
    for out_g in 0..g {
        for (in_g, block) in per_group.iter().enumerate() {
            let s = coeff(out_g, in_g);
            if s == ZERO {
                continue;
            }
            for j in 0..len {
                axpy(out.column_mut(out_g * len + j), s, block.column(j));
            }
        }
    }
    out
}

#[inline]
fn axpy(dst: &mut [Complex64], s: Complex64, src: &[Complex64]) {
    for (d, x) in dst.iter_mut().zip(src) {
        *d += x * s;
    }
}
