//! Rayleigh channels with distance pathloss and the cascaded channel `Q`.
//!
//! For a block-diagonal scattering matrix `Phi = blkdiag(Phi_1..Phi_G)` the
//! user–RIS–BS channel is linear in the vectorized blocks:
//!
//! ```text
//! G Phi h = sum_g G_g Phi_g h_g = sum_g (h_g^T ⊗ G_g) vec(Phi_g) = sum_g Q_g vec(Phi_g)
//! ```
//!
//! where `G_g` holds columns `g*Mbar..(g+1)*Mbar` of `G` and `h_g` the matching
//! entries of `h`. `Q = [Q_1 .. Q_G]` is what the estimator recovers.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::codebook::GroupTopology;
use crate::linalg::{kron, vec, CMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("expected {expected} scattering blocks, got {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("scattering block {index} is {shape:?}, expected {m_bar}x{m_bar}")]
    BlockShape {
        index: usize,
        shape: (usize, usize),
        m_bar: usize,
    },
    #[error("channel dimensions {found:?} do not match the topology ({expected:?})")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    BsRis,
    RisUser,
}

/// Large-scale propagation, noise and uplink power parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Attenuation at the reference distance, in dB.
    pub zeta0_db: f64,
    pub d0_m: f64,
    pub d_bi_m: f64,
    pub d_iu_m: f64,
    /// Pathloss exponent.
    pub epsilon: f64,
    pub noise_power_dbm: f64,
    pub tx_power_dbm: f64,
}

impl Default for LinkBudget {
    /// -30 dB at 1 m, 50 m BS–RIS, 10 m RIS–user, exponent 2.2, -100 dBm
    /// noise, 30 dBm uplink power.
    fn default() -> Self {
        Self {
            zeta0_db: -30.0,
            d0_m: 1.0,
            d_bi_m: 50.0,
            d_iu_m: 10.0,
            epsilon: 2.2,
            noise_power_dbm: -100.0,
            tx_power_dbm: 30.0,
        }
    }
}

impl LinkBudget {
    pub fn with_tx_power_dbm(self, tx_power_dbm: f64) -> Self {
        Self { tx_power_dbm, ..self }
    }

    pub fn with_noise_power_dbm(self, noise_power_dbm: f64) -> Self {
        Self {
            noise_power_dbm,
            ..self
        }
    }

    /// Checks the positivity constraints; returns the offending field name.
    pub fn validate(&self) -> Result<(), &'static str> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.d0_m) {
            return Err("d0_m");
        }
        if !positive(self.d_bi_m) {
            return Err("d_bi_m");
        }
        if !positive(self.d_iu_m) {
            return Err("d_iu_m");
        }
        if !positive(self.epsilon) {
            return Err("epsilon");
        }
        if self.zeta0_db.is_nan() {
            return Err("zeta0_db");
        }
        if self.noise_power_dbm.is_nan() {
            return Err("noise_power_dbm");
        }
        if !self.tx_power_dbm.is_finite() {
            return Err("tx_power_dbm");
        }
        Ok(())
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Linear power gain `zeta0 * (d / d0)^-epsilon` of one hop.
    pub fn pathloss(&self, link: Link) -> f64 {
        let d = match link {
            Link::BsRis => self.d_bi_m,
            Link::RisUser => self.d_iu_m,
        };
        db_to_linear(self.zeta0_db) * (d / self.d0_m).powf(-self.epsilon)
    }
}

/// One draw of the RIS→BS channel `G` (N x M) and user→RIS channel `h` (M x 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g_mat: CMatrix,
    pub h_vec: CMatrix,
}

impl ChannelRealization {
    pub fn new(top: &GroupTopology, g_mat: CMatrix, h_vec: CMatrix) -> Result<Self, ChannelError> {
        let (n, m) = (top.n_bs(), top.m());
        if g_mat.shape() != (n, m) {
            return Err(ChannelError::Shape {
                expected: (n, m),
                found: g_mat.shape(),
            });
        }
        if h_vec.shape() != (m, 1) {
            return Err(ChannelError::Shape {
                expected: (m, 1),
                found: h_vec.shape(),
            });
        }
        Ok(Self { g_mat, h_vec })
    }

    /// `G_g`, the columns of `G` feeding group `g`.
    pub fn g_block(&self, g: usize, m_bar: usize) -> CMatrix {
        self.g_mat.columns(g * m_bar, m_bar)
    }

    /// `h_g`, the entries of `h` for group `g`.
    pub fn h_block(&self, g: usize, m_bar: usize) -> CMatrix {
        self.h_vec.row_block(g * m_bar, m_bar)
    }
}

/// `Q = [Q_1 .. Q_G]`, `N x G*Mbar^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedChannel {
    q: CMatrix,
    g: usize,
    m_bar: usize,
}

impl CascadedChannel {
    pub fn new(q: CMatrix, g: usize, m_bar: usize) -> Result<Self, ChannelError> {
        if q.cols() != g * m_bar * m_bar {
            return Err(ChannelError::Shape {
                expected: (q.rows(), g * m_bar * m_bar),
                found: q.shape(),
            });
        }
        Ok(Self { q, g, m_bar })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }

    pub fn into_matrix(self) -> CMatrix {
        self.q
    }

    pub fn groups(&self) -> usize {
        self.g
    }

    pub fn m_bar(&self) -> usize {
        self.m_bar
    }

    /// `Q_g`.
    pub fn block(&self, g: usize) -> CMatrix {
        let len = self.m_bar * self.m_bar;
        self.q.columns(g * len, len)
    }

    // Stacks vec(f(Phi_g)) over g after checking the block shapes.
    fn stacked(&self, blocks: &[CMatrix], f: impl Fn(&CMatrix) -> CMatrix) -> Result<CMatrix, ChannelError> {
        if blocks.len() != self.g {
            return Err(ChannelError::BlockCount {
                expected: self.g,
                found: blocks.len(),
            });
        }
        let mut entries = Vec::with_capacity(self.q.cols());
        for (index, b) in blocks.iter().enumerate() {
            if b.shape() != (self.m_bar, self.m_bar) {
                return Err(ChannelError::BlockShape {
                    index,
                    shape: b.shape(),
                    m_bar: self.m_bar,
                });
            }
            entries.extend_from_slice(vec(&f(b)).as_slice());
        }
        Ok(CMatrix::column_vector(&entries))
    }
}

/// i.i.d. circularly-symmetric Gaussian entries with `E|x|^2 = zeta`.
fn rayleigh<R: Rng + ?Sized>(rows: usize, cols: usize, zeta: f64, rng: &mut R) -> CMatrix {
    let sigma = (zeta / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sigma * re, sigma * im)
    })
}

/// Draws `G` then `h`, each entry `CN(0, zeta)` for its hop.
pub fn draw_channels<R: Rng + ?Sized>(top: &GroupTopology, lb: &LinkBudget, rng: &mut R) -> ChannelRealization {
    let g_mat = rayleigh(top.n_bs(), top.m(), lb.pathloss(Link::BsRis), rng);
    let h_vec = rayleigh(top.m(), 1, lb.pathloss(Link::RisUser), rng);
    ChannelRealization { g_mat, h_vec }
}

/// `Q_g = h_g^T ⊗ G_g` for every group.
pub fn cascade(top: &GroupTopology, ch: &ChannelRealization) -> CascadedChannel {
    let (n, g, m_bar) = (top.n_bs(), top.g(), top.m_bar());
    let len = m_bar * m_bar;
    let mut q = CMatrix::zeros(n, g * len);
    for gi in 0..g {
        let qg = kron(&ch.h_block(gi, m_bar).transpose(), &ch.g_block(gi, m_bar));
        for j in 0..len {
            q.column_mut(gi * len + j).copy_from_slice(qg.column(j));
        }
    }
    CascadedChannel { q, g, m_bar }
}

/// `h_u = sum_g Q_g vec(Phi_g)`, an `N x 1` column.
pub fn effective_uplink(q: &CascadedChannel, phi_blocks: &[CMatrix]) -> Result<CMatrix, ChannelError> {
    Ok(q.q.matmul(&q.stacked(phi_blocks, Clone::clone)?))
}

/// Largest entrywise gap between the downlink row `h^T Phi' G^T`, computed
/// from the separate channels, and `sum_g vec^T(Phi'_g^T) Q_g^T`, computed
/// from the uplink cascaded channel alone.
pub fn reciprocity_check(
    q: &CascadedChannel,
    ch: &ChannelRealization,
    phi_blocks: &[CMatrix],
) -> Result<f64, ChannelError> {
    let stacked = q.stacked(phi_blocks, CMatrix::transpose)?;
    let from_cascade = stacked.transpose().matmul(&q.q.transpose());
    let phi = CMatrix::block_diag(phi_blocks);
    if phi.rows() != ch.h_vec.rows() || ch.g_mat.shape() != (q.q.rows(), phi.cols()) {
        return Err(ChannelError::Shape {
            expected: (q.q.rows(), phi.cols()),
            found: ch.g_mat.shape(),
        });
    }
    let downlink = ch.h_vec.transpose().matmul(&phi).matmul(&ch.g_mat.transpose());
    Ok(downlink.max_abs_diff(&from_cascade))
}

/// Debug dump: a `N,M` header line, the dimensions, `N` rows of `G`, then one
/// row holding `h`. Every row lists interleaved `re,im` values.
pub fn write_channel_csv<W: Write>(ch: &ChannelRealization, mut out: W) -> io::Result<()> {
    let (n, m) = ch.g_mat.shape();
    writeln!(out, "N,M")?;
    writeln!(out, "{n},{m}")?;
    let row = |vals: &mut dyn Iterator<Item = Complex64>| {
        vals.map(|z| format!("{:?},{:?}", z.re, z.im))
            .collect::<Vec<_>>()
            .join(",")
    };
    for i in 0..n {
        writeln!(out, "{}", row(&mut (0..m).map(|j| ch.g_mat[(i, j)])))?;
    }
    writeln!(out, "{}", row(&mut ch.h_vec.as_slice().iter().copied()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn top(g: usize, m_bar: usize) -> GroupTopology {
        GroupTopology::new(4, g, m_bar).unwrap()
    }

    #[test]
    fn pathloss_values() {
        let lb = LinkBudget::default();
        let at_ref = LinkBudget { d_bi_m: 1.0, ..lb };
        assert!((at_ref.pathloss(Link::BsRis) - 1e-3).abs() < 1e-18);
        let bi = lb.pathloss(Link::BsRis);
        let iu = lb.pathloss(Link::RisUser);
        // 1e-3 * 50^-2.2 and 1e-3 * 10^-2.2
        assert!((bi - 1e-3 * (-2.2 * 50f64.ln()).exp()).abs() < 1e-20);
        assert!((bi / 1.830e-7 - 1.0).abs() < 1e-3, "{bi}");
        assert!((iu / 6.3096e-6 - 1.0).abs() < 1e-4, "{iu}");
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(-100.0) - 1e-13).abs() < 1e-27);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((watts_to_dbm(0.1) - 20.0).abs() < 1e-12);
        assert!((db_to_linear(-30.0) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn link_budget_validation_names_fields() {
        let lb = LinkBudget::default();
        assert_eq!(lb.validate(), Ok(()));
        assert_eq!(LinkBudget { d_iu_m: 0.0, ..lb }.validate(), Err("d_iu_m"));
        assert_eq!(LinkBudget { epsilon: -1.0, ..lb }.validate(), Err("epsilon"));
    }

    #[test]
    fn second_moment_matches_pathloss() {
        let lb = LinkBudget::default();
        let t = GroupTopology::new(100, 1000, 1).unwrap();
        let ch = draw_channels(&t, &lb, &mut ChaCha8Rng::seed_from_u64(1));
        // 1e5 entries of G
        let mean = ch.g_mat.frobenius_norm_sqr() / 1e5;
        assert!((mean / lb.pathloss(Link::BsRis) - 1.0).abs() < 0.02, "{mean}");
        let mean_h = ch.h_vec.frobenius_norm_sqr() / 1000.0;
        assert!((mean_h / lb.pathloss(Link::RisUser) - 1.0).abs() < 0.15);
    }

    #[test]
    fn seeded_draws_repeat() {
        let lb = LinkBudget::default();
        let a = draw_channels(&top(4, 2), &lb, &mut ChaCha8Rng::seed_from_u64(9));
        let b = draw_channels(&top(4, 2), &lb, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_gain_gives_zero_channels() {
        let lb = LinkBudget {
            zeta0_db: f64::NEG_INFINITY,
            ..LinkBudget::default()
        };
        let ch = draw_channels(&top(2, 2), &lb, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(ch.g_mat.max_abs(), 0.0);
        assert_eq!(ch.h_vec.max_abs(), 0.0);
    }

    #[test]
    fn single_connected_cascade_is_g_diag_h() {
        let t = top(6, 1);
        let ch = draw_channels(&t, &LinkBudget::default(), &mut ChaCha8Rng::seed_from_u64(2));
        let q = cascade(&t, &ch);
        let diag_h = CMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                ch.h_vec[(i, 0)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!(q.matrix().max_abs_diff(&ch.g_mat.matmul(&diag_h)) <= 1e-15 * q.matrix().max_abs());
    }

    #[test]
    fn cascade_identity_against_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (g, m_bar) in [(4, 2), (2, 3), (1, 4), (8, 1)] {
            let t = top(g, m_bar);
            let ch = draw_channels(&t, &LinkBudget::default(), &mut rng);
            let q = cascade(&t, &ch);
            let blocks: Vec<CMatrix> = (0..g).map(|_| haar_unitary(m_bar, &mut rng)).collect();
            let direct = ch.g_mat.matmul(&CMatrix::block_diag(&blocks)).matmul(&ch.h_vec);
            let via_q = effective_uplink(&q, &blocks).unwrap();
            assert!((&direct - &via_q).frobenius_norm() <= 1e-10 * direct.frobenius_norm());
            let gap = reciprocity_check(&q, &ch, &blocks).unwrap();
            assert!(gap <= 1e-10 * direct.max_abs());
        }
    }

    #[test]
    fn identity_configuration_and_zero_channels() {
        let t = top(4, 2);
        let ch = draw_channels(&t, &LinkBudget::default(), &mut ChaCha8Rng::seed_from_u64(8));
        let q = cascade(&t, &ch);
        let ident = vec![CMatrix::identity(2); 4];
        let hu = effective_uplink(&q, &ident).unwrap();
        let gh = ch.g_mat.matmul(&ch.h_vec);
        assert!(hu.max_abs_diff(&gh) <= 1e-10 * gh.max_abs());
        assert!(reciprocity_check(&q, &ch, &ident).unwrap() <= 1e-10 * gh.max_abs());

        let zero = ChannelRealization::new(&t, CMatrix::zeros(4, 8), CMatrix::zeros(8, 1)).unwrap();
        let qz = cascade(&t, &zero);
        assert_eq!(qz.matrix().max_abs(), 0.0);
        assert_eq!(effective_uplink(&qz, &ident).unwrap().max_abs(), 0.0);
        assert_eq!(reciprocity_check(&qz, &zero, &ident).unwrap(), 0.0);
    }

    #[test]
    fn block_errors() {
        let t = top(2, 2);
        let ch = draw_channels(&t, &LinkBudget::default(), &mut ChaCha8Rng::seed_from_u64(8));
        let q = cascade(&t, &ch);
        assert_eq!(
            effective_uplink(&q, &[CMatrix::identity(2)]).unwrap_err(),
            ChannelError::BlockCount { expected: 2, found: 1 }
        );
        assert!(matches!(
            effective_uplink(&q, &[CMatrix::identity(2), CMatrix::identity(3)]),
            Err(ChannelError::BlockShape { index: 1, .. })
        ));
        assert!(ChannelRealization::new(&t, CMatrix::zeros(4, 3), CMatrix::zeros(4, 1)).is_err());
    }

    #[test]
    fn channel_csv_layout() {
        let t = GroupTopology::new(2, 1, 1).unwrap();
        let ch = ChannelRealization::new(
            &t,
            CMatrix::from_real_rows(&[&[1.0], &[2.0]]),
            CMatrix::from_real_rows(&[&[0.5]]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_channel_csv(&ch, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N,M\n2,1\n1.0,0.0\n2.0,0.0\n0.5,0.0\n");
    }
}
