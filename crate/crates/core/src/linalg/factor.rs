use faer::linalg::solvers::LltError;
use faer::linalg::triangular_inverse::invert_lower_triangular;
use faer::{Par, Side};
use num_complex::Complex64;

use super::{CMatrix, LinalgError};

/// Condition numbers above this are treated as rank deficiency.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Cholesky factorization `A = L L^H` of a Hermitian positive definite matrix,
/// together with `L^{-1}`.
///
/// The condition estimate is the squared ratio of the largest to the smallest
/// pivot of `L`. It is a lower bound on the 2-norm condition number of `A`
/// and is exact for diagonal matrices.
#[derive(Debug, Clone)]
pub struct HermitianFactor {
    l: CMatrix,
    l_inv: CMatrix,
    condition_estimate: f64,
}

impl HermitianFactor {
    pub fn new(a: &CMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                op: "hermitian_factor",
                left: a.shape(),
                right: (a.cols(), a.rows()),
            });
        }
        let llt = a.as_faer().llt(Side::Lower).map_err(|e| match e {
            LltError::NonPositivePivot { index } => LinalgError::NotPositiveDefinite { pivot: index },
        })?;
        let l = CMatrix::from_faer(llt.L());

        let n = l.rows();
        let (lo, hi) = (0..n)
            .map(|i| l[(i, i)].norm())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let condition_estimate = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
        if condition_estimate.is_nan() || condition_estimate > CONDITION_LIMIT {
            return Err(LinalgError::IllConditioned {
                estimate: condition_estimate,
            });
        }

        let mut l_inv = CMatrix::zeros(n, n);
        invert_lower_triangular(l_inv.as_faer_mut(), l.as_faer(), Par::Seq);
        Ok(Self {
            l,
            l_inv,
            condition_estimate,
        })
    }

    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// `tr(A^{-1}) = ||L^{-1}||_F^2`.
    pub fn inverse_trace(&self) -> f64 {
        self.l_inv.frobenius_norm_sqr()
    }

    /// `A^{-1} = L^{-H} L^{-1}`.
    pub fn inverse(&self) -> CMatrix {
        self.l_inv.adjoint_matmul(&self.l_inv)
    }
}

/// Unitary factor of a QR decomposition of the square matrix `z`, with each
/// column rotated by the phase of the matching diagonal entry of `R`. This
/// removes the phase ambiguity of Householder QR, so a complex Gaussian `z`
/// yields a Haar-distributed unitary.
///
/// Returns `None` when `R` has a (numerically) zero pivot.
pub fn haar_qr_phase_corrected(z: &CMatrix) -> Option<CMatrix> {
    assert!(z.is_square(), "QR phase correction needs a square matrix");
    let qr = z.as_faer().qr();
    let r = qr.R();
    let mut q = CMatrix::from_faer(qr.compute_Q().as_ref());
    let n = z.rows();
    let scale = z.max_abs();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm().is_nan() || d.norm() <= 1e-12 * scale {
            return None;
        }
        let phase: Complex64 = d / d.norm();
        for x in q.column_mut(j) {
            *x *= phase;
        }
    }
    Some(q)
}
