use std::f64::consts::PI;

use num_complex::Complex64;

use super::{CMatrix, LinalgError, ONE};

/// Absolute tolerance on the largest entry used by the unitarity validators.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Kronecker product: block `(i, j)` of the result is `a[i, j] * b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = b.shape();
    CMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Entrywise product of two equally shaped matrices.
pub fn hadamard_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "hadamard_product",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(CMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * b[(i, j)]))
}

/// Column-major vectorization into a `rows*cols x 1` matrix.
pub fn vec(a: &CMatrix) -> CMatrix {
    CMatrix::column_vector(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CMatrix, rows: usize, cols: usize) -> Result<CMatrix, LinalgError> {
    if v.cols() != 1 || v.rows() != rows * cols {
        return Err(LinalgError::LengthMismatch {
            expected: rows * cols,
            found: v.rows() * v.cols(),
        });
    }
    CMatrix::from_column_major(rows, cols, v.as_slice().to_vec())
}

/// Rotates right by `n`: the final `n` entries move to the front. `n` is
/// reduced modulo the length.
pub fn circshift<T: Clone>(v: &[T], n: usize) -> Vec<T> {
    let mut out = v.to_vec();
    if !out.is_empty() {
        out.rotate_right(n % v.len());
    }
    out
}

/// Unnormalized DFT matrix, `F[j, k] = exp(-2*pi*i*j*k/n)`, so `F^H F = n I`.
pub fn dft_matrix(n: usize) -> CMatrix {
    assert!(n >= 1, "DFT order must be positive");
    CMatrix::from_fn(n, n, |j, k| unit_root((j * k) % n, n))
}

// exp(-2*pi*i*r/n); quarter turns are returned exactly.
fn unit_root(r: usize, n: usize) -> Complex64 {
    if (4 * r).is_multiple_of(n) {
        return match 4 * r / n {
            0 => ONE,
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
    }
    let (s, c) = (2.0 * PI * r as f64 / n as f64).sin_cos();
    Complex64::new(c, -s)
}

/// Sylvester Hadamard matrix of order `n` (1 or a power of two).
pub fn hadamard_matrix(n: usize) -> Result<CMatrix, LinalgError> {
    let signs = sylvester_signs(n)?;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(f64::from(signs[i][j]), 0.0)
    }))
}

/// Integer ±1 entries of the Sylvester Hadamard matrix of order `n`.
pub fn sylvester_signs(n: usize) -> Result<Vec<Vec<i8>>, LinalgError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(LinalgError::UnsupportedOrder(n));
    }
    let mut h = vec![vec![1i8]];
    while h.len() < n {
        let k = h.len();
        let mut next = vec![vec![0i8; 2 * k]; 2 * k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = h[i][j];
                next[i][j + k] = h[i][j];
                next[i + k][j] = h[i][j];
                next[i + k][j + k] = -h[i][j];
            }
        }
        h = next;
    }
    Ok(h)
}

/// `max |a^H a - alpha I|`, or infinity when `a` is not square.
pub fn scaled_unitary_violation(a: &CMatrix, alpha: f64) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let gram = a.adjoint_matmul(a);
    let mut worst = 0.0f64;
    for j in 0..gram.cols() {
        for i in 0..gram.rows() {
            let target = if i == j { alpha } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// True iff `a` is square and `a^H a = alpha I` to within `tol` on every entry.
pub fn is_scaled_unitary(a: &CMatrix, alpha: f64, tol: f64) -> bool {
    scaled_unitary_violation(a, alpha) <= tol
}
