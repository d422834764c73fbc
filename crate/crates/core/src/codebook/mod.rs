//! Training codebooks for group-connected BD-RIS channel estimation.
//!
//! A codebook is the `G*Mbar^2 x T` matrix whose column `t` stacks
//! `vec(Phi_{t,1}), ..., vec(Phi_{t,G})`, the per-group scattering blocks
//! applied during training slot `t`. Every block must be unitary. The LS
//! estimation error is proportional to `tr((Phi Phi^H)^{-1})`, which is at
//! least `Mbar`, with equality exactly when `Phi Phi^H = M I`.
//!
//! The optimal construction is `Phi = X ⊗ Phibar`:
//!
//! - `X` is a `G x G` matrix with unit-modulus entries and `X X^H = G I`
//!   (a DFT or Sylvester Hadamard matrix);
//! - `Phibar` is `Mbar^2 x Mbar^2` with `Phibar Phibar^H = Mbar I` and every
//!   column reshaping to a unitary `Mbar x Mbar` block. Column `m*Mbar + n`
//!   is `circshift(vec(Z1), n*Mbar) ⊙ (Z2[:, m] ⊗ 1)`, built from two
//!   scaled-unitary bases with `alpha1 * alpha2 = Mbar`.
//!
//! Slot indices are zero-based. Slot `t = g' * Mbar^2 + m` of the Kronecker
//! codebook is column `g'` of `X` times column `m` of `Phibar`.

mod export;
mod fast;
mod validate;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{
    circshift, dft_matrix, haar_qr_phase_corrected, hadamard_matrix, kron, scaled_unitary_violation, unvec, vec,
    CMatrix, HermitianFactor, LinalgError, DEFAULT_TOL,
};

pub use export::{read_binary, read_codebook, read_csv, write_binary, write_csv, BINARY_MAGIC, BINARY_VERSION};
pub use validate::{validate_codebook, ConstraintCheck, ValidationReport, MSE_FACTOR_TOL};

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("base condition `{condition}` violated by {violation:.3e}")]
    BaseCondition { condition: &'static str, violation: f64 },
    #[error("{0} bases have no deterministic construction; use random_codebook")]
    NotDeterministic(BaseKind),
    #[error("slot {t} out of range for {t_slots} training slots")]
    SlotOutOfRange { t: usize, t_slots: usize },
    #[error("codebook format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dimensions of the BS array and the group-connected BD-RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupTopology {
    n_bs: usize,
    m: usize,
    g: usize,
    m_bar: usize,
}

impl GroupTopology {
    /// `g` groups of `m_bar` interconnected ports each, `M = g * m_bar`.
    pub fn new(n_bs: usize, g: usize, m_bar: usize) -> Result<Self, CodebookError> {
        if n_bs == 0 || g == 0 || m_bar == 0 {
            return Err(CodebookError::Topology(format!(
                "all dimensions must be at least 1 (N={n_bs}, G={g}, Mbar={m_bar})"
            )));
        }
        Ok(Self {
            n_bs,
            m: g * m_bar,
            g,
            m_bar,
        })
    }

    /// Uniform split of `m` elements into `g` groups.
    pub fn from_elements(n_bs: usize, m: usize, g: usize) -> Result<Self, CodebookError> {
        if g == 0 || !m.is_multiple_of(g) {
            return Err(CodebookError::Topology(format!(
                "M={m} is not divisible into G={g} groups"
            )));
        }
        Self::new(n_bs, g, m / g)
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn m_bar(&self) -> usize {
        self.m_bar
    }

    /// Entries of `vec(Phi_g)`, i.e. `Mbar^2`.
    pub fn block_len(&self) -> usize {
        self.m_bar * self.m_bar
    }

    /// Minimum training length `G * Mbar^2`, also the row count of the codebook.
    pub fn t_min(&self) -> usize {
        self.g * self.block_len()
    }

    pub fn is_single_connected(&self) -> bool {
        self.m_bar == 1
    }

    pub fn is_fully_connected(&self) -> bool {
        self.g == 1
    }
}

impl fmt::Display for GroupTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} M={} G={} Mbar={}", self.n_bs, self.m, self.g, self.m_bar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseKind {
    Dft,
    Hadamard,
    RandomUnitary,
}

impl BaseKind {
    pub const ALL: [BaseKind; 3] = [BaseKind::Dft, BaseKind::Hadamard, BaseKind::RandomUnitary];

    pub fn as_str(&self) -> &'static str {
        match self {
            BaseKind::Dft => "dft",
            BaseKind::Hadamard => "hadamard",
            BaseKind::RandomUnitary => "random",
        }
    }

    /// DFT and Hadamard codebooks meet `Phi Phi^H = M I`.
    pub fn is_orthogonal(&self) -> bool {
        !matches!(self, BaseKind::RandomUnitary)
    }

    pub(crate) fn code(&self) -> u32 {
        match self {
            BaseKind::Dft => 0,
            BaseKind::Hadamard => 1,
            BaseKind::RandomUnitary => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(BaseKind::Dft),
            1 => Some(BaseKind::Hadamard),
            2 => Some(BaseKind::RandomUnitary),
            _ => None,
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dft" => Ok(BaseKind::Dft),
            "hadamard" => Ok(BaseKind::Hadamard),
            "random" | "random-unitary" | "random_unitary" => Ok(BaseKind::RandomUnitary),
            other => Err(format!("unknown strategy `{other}` (expected dft, hadamard or random)")),
        }
    }
}

/// The factors of a Kronecker-structured codebook.
#[derive(Debug, Clone)]
pub struct KroneckerFactors {
    pub x: CMatrix,
    pub phibar: CMatrix,
    pub z1: CMatrix,
    pub z2: CMatrix,
    pub alpha1: f64,
    pub alpha2: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingCodebook {
    topology: GroupTopology,
    kind: BaseKind,
    phi_hat: CMatrix,
    factors: Option<KroneckerFactors>,
}

impl TrainingCodebook {
    /// Wraps an existing training matrix, e.g. one read back from disk.
    /// Only the shape is checked here; see [`validate_codebook`].
    pub fn from_matrix(topology: GroupTopology, kind: BaseKind, phi_hat: CMatrix) -> Result<Self, CodebookError> {
        if phi_hat.rows() != topology.t_min() {
            return Err(CodebookError::Format(format!(
                "training matrix has {} rows, topology needs {}",
                phi_hat.rows(),
                topology.t_min()
            )));
        }
        if phi_hat.cols() < topology.t_min() {
            return Err(CodebookError::Format(format!(
                "{} training slots cannot resolve {} unknowns per antenna",
                phi_hat.cols(),
                topology.t_min()
            )));
        }
        Ok(Self {
            topology,
            kind,
            phi_hat,
            factors: None,
        })
    }

    pub fn topology(&self) -> &GroupTopology {
        &self.topology
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn phi_hat(&self) -> &CMatrix {
        &self.phi_hat
    }

    pub fn t_slots(&self) -> usize {
        self.phi_hat.cols()
    }

    pub fn factors(&self) -> Option<&KroneckerFactors> {
        self.factors.as_ref()
    }

    /// `(alpha1, alpha2)` of the Kronecker construction, if any.
    pub fn alphas(&self) -> Option<(f64, f64)> {
        self.factors.as_ref().map(|f| (f.alpha1, f.alpha2))
    }

    /// Short label such as `dft:G16xMbar2`.
    pub fn id(&self) -> String {
        format!("{}:G{}xMbar{}", self.kind, self.topology.g, self.topology.m_bar)
    }

    /// The `G` scattering blocks of slot `t` (zero-based).
    pub fn slot_matrices(&self, t: usize) -> Result<Vec<CMatrix>, CodebookError> {
        if t >= self.t_slots() {
            return Err(CodebookError::SlotOutOfRange {
                t,
                t_slots: self.t_slots(),
            });
        }
        let m_bar = self.topology.m_bar;
        let len = self.topology.block_len();
        self.phi_hat
            .column(t)
            .chunks_exact(len)
            .map(|seg| Ok(unvec(&CMatrix::column_vector(seg), m_bar, m_bar)?))
            .collect()
    }

    /// `a * Phi`, using the Kronecker structure when available.
    pub fn right_multiply(&self, a: &CMatrix) -> CMatrix {
        match &self.factors {
            Some(f) => f.right_multiply(a),
            None => a.matmul(&self.phi_hat),
        }
    }

    /// `a * Phi^H`, using the Kronecker structure when available.
    pub fn right_multiply_adjoint(&self, a: &CMatrix) -> CMatrix {
        match &self.factors {
            Some(f) => f.right_multiply_adjoint(a),
            None => a.matmul_adjoint(&self.phi_hat),
        }
    }
}

/// `G x G` base `X` with `X X^H = G I` and unit-modulus entries.
pub fn build_group_base(g: usize, kind: BaseKind) -> Result<CMatrix, CodebookError> {
    match kind {
        BaseKind::Dft => Ok(dft_matrix(g)),
        BaseKind::Hadamard => Ok(hadamard_matrix(g)?),
        BaseKind::RandomUnitary => Err(CodebookError::NotDeterministic(kind)),
    }
}

/// Builds `Phibar` column by column from the scaled-unitary bases `z1` and `z2`.
pub fn build_phibar(m_bar: usize, z1: &CMatrix, z2: &CMatrix) -> Result<CMatrix, CodebookError> {
    let (alpha1, alpha2) = check_phibar_bases(m_bar, z1, z2)?;
    debug_assert!((alpha1 * alpha2 - m_bar as f64).abs() <= DEFAULT_TOL * m_bar as f64);

    let vec_z1: Vec<Complex64> = vec(z1).into_vec();
    let mut phibar = CMatrix::zeros(m_bar * m_bar, m_bar * m_bar);
    for m in 0..m_bar {
        for n in 0..m_bar {
            let shifted = circshift(&vec_z1, n * m_bar);
            let col = phibar.column_mut(m * m_bar + n);
            for (p, (dst, s)) in col.iter_mut().zip(&shifted).enumerate() {
                // [Z2[:, m] ⊗ 1_Mbar]_p = Z2[p / Mbar, m]
                *dst = s * z2[(p / m_bar, m)];
            }
        }
    }
    Ok(phibar)
}

/// Checks the base preconditions and returns `(alpha1, alpha2)`.
fn check_phibar_bases(m_bar: usize, z1: &CMatrix, z2: &CMatrix) -> Result<(f64, f64), CodebookError> {
    for (z, name) in [(z1, "Z1 is Mbar x Mbar"), (z2, "Z2 is Mbar x Mbar")] {
        if z.shape() != (m_bar, m_bar) {
            return Err(CodebookError::BaseCondition {
                condition: name,
                violation: f64::INFINITY,
            });
        }
    }
    let alpha1 = z1.adjoint_matmul(z1)[(0, 0)].re;
    let alpha2 = z2.adjoint_matmul(z2)[(0, 0)].re;
    let tol = |scale: f64| DEFAULT_TOL * scale.max(1.0);

    let v1 = scaled_unitary_violation(z1, alpha1);
    if !(alpha1 > 0.0 && v1 <= tol(alpha1)) {
        return Err(CodebookError::BaseCondition {
            condition: "Z1^H Z1 = alpha1 I",
            violation: v1,
        });
    }
    let v2 = scaled_unitary_violation(z2, alpha2);
    if !(alpha2 > 0.0 && v2 <= tol(alpha2)) {
        return Err(CodebookError::BaseCondition {
            condition: "Z2^H Z2 = alpha2 I",
            violation: v2,
        });
    }
    let modulus = (alpha2 / m_bar as f64).sqrt();
    let vm = z2
        .as_slice()
        .iter()
        .map(|z| (z.norm() - modulus).abs())
        .fold(0.0, f64::max);
    if vm > tol(modulus) {
        return Err(CodebookError::BaseCondition {
            condition: "|Z2[i,j]| = sqrt(alpha2 / Mbar)",
            violation: vm,
        });
    }
    let vp = (alpha1 * alpha2 - m_bar as f64).abs();
    if vp > tol(m_bar as f64) {
        return Err(CodebookError::BaseCondition {
            condition: "alpha1 * alpha2 = Mbar",
            violation: vp,
        });
    }
    Ok((alpha1, alpha2))
}

/// `Z1 = B`, `Z2 = B / sqrt(Mbar)` for the `Mbar`-point DFT or Hadamard `B`.
fn phibar_bases(m_bar: usize, kind: BaseKind) -> Result<(CMatrix, CMatrix), CodebookError> {
    let z1 = build_group_base(m_bar, kind)?;
    let z2 = z1.scale_real(1.0 / (m_bar as f64).sqrt());
    Ok((z1, z2))
}

/// Optimal codebook `X ⊗ Phibar` with `T = G * Mbar^2` slots.
pub fn build_codebook(top: GroupTopology, kind: BaseKind) -> Result<TrainingCodebook, CodebookError> {
    let x = build_group_base(top.g, kind)?;
    let (z1, z2) = phibar_bases(top.m_bar, kind)?;
    let phibar = build_phibar(top.m_bar, &z1, &z2)?;
    let phi_hat = kron(&x, &phibar);
    Ok(TrainingCodebook {
        topology: top,
        kind,
        phi_hat,
        factors: Some(KroneckerFactors {
            x,
            phibar,
            z1,
            z2,
            alpha1: top.m_bar as f64,
            alpha2: 1.0,
        }),
    })
}

/// Haar-distributed `n x n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let z = CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        if let Some(q) = haar_qr_phase_corrected(&z) {
            return q;
        }
    }
}

/// Baseline codebook whose blocks are independent Haar unitaries. The block
/// constraint holds but the Gram matrix is generally not a multiple of `I`.
pub fn random_codebook<R: Rng + ?Sized>(top: GroupTopology, rng: &mut R) -> TrainingCodebook {
    let t_slots = top.t_min();
    let len = top.block_len();
    let mut phi_hat = CMatrix::zeros(t_slots, t_slots);
    for t in 0..t_slots {
        for g in 0..top.g {
            let u = haar_unitary(top.m_bar, rng);
            phi_hat.column_mut(t)[g * len..(g + 1) * len].copy_from_slice(u.as_slice());
        }
    }
    TrainingCodebook {
        topology: top,
        kind: BaseKind::RandomUnitary,
        phi_hat,
        factors: None,
    }
}

/// `tr((Phi Phi^H)^{-1})`; fails when `Phi` is numerically rank deficient.
pub fn codebook_mse_factor(cb: &TrainingCodebook) -> Result<f64, CodebookError> {
    let gram = cb.phi_hat.matmul_adjoint(&cb.phi_hat);
    Ok(HermitianFactor::new(&gram)?.inverse_trace())
}
