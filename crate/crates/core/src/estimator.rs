//! Uplink training, least-squares recovery of `Q`, and its mean squared error.
//!
//! With pilots fixed to 1 the BS observes `Y = sqrt(P) Q Phi + N` over the
//! training slots, and the LS estimate is
//! `Qhat = Y Phi^H (Phi Phi^H)^{-1} / sqrt(P)`. Its MSE is
//! `N sigma^2 / P * tr((Phi Phi^H)^{-1})`, at least `N sigma^2 Mbar / P`.
//! For DFT/Hadamard codebooks `Phi Phi^H = M I`, so the pseudo-inverse is just
//! `Phi^H / M` and no matrix inversion is needed.

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channel::{cascade, draw_channels, CascadedChannel, LinkBudget};
use crate::codebook::{codebook_mse_factor, BaseKind, CodebookError, GroupTopology, TrainingCodebook};
use crate::linalg::{CMatrix, HermitianFactor, LinalgError};
use crate::seed::rng_for;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Received pilots `Y` (N x T) for one training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingObservation {
    pub y: CMatrix,
    pub codebook_id: String,
    pub tx_power_w: f64,
}

/// One point of an MSE-versus-power curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRecord {
    pub tx_power_dbm: f64,
    pub g: usize,
    pub m_bar: usize,
    pub strategy: BaseKind,
    pub empirical_mse: f64,
    /// Standard error of `empirical_mse` across trials.
    pub empirical_std_error: f64,
    pub theoretical_mse: f64,
    pub lower_bound: f64,
    pub n_trials: usize,
}

/// Circularly-symmetric complex Gaussian noise with total variance `power`.
pub fn complex_noise<R: Rng + ?Sized>(rows: usize, cols: usize, power: f64, rng: &mut R) -> CMatrix {
    let sigma = (power / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sigma * re, sigma * im)
    })
}

fn check_codebook_fits(q: &CMatrix, cb: &TrainingCodebook) -> Result<(), EstimatorError> {
    if q.cols() != cb.phi_hat().rows() {
        return Err(EstimatorError::Shape(format!(
            "cascaded channel has {} columns, codebook {} expects {}",
            q.cols(),
            cb.id(),
            cb.phi_hat().rows()
        )));
    }
    Ok(())
}

/// `Y = sqrt(P) Q Phi + N` with `N` entries `CN(0, sigma^2)`.
pub fn simulate_training<R: Rng + ?Sized>(
    q: &CascadedChannel,
    cb: &TrainingCodebook,
    lb: &LinkBudget,
    rng: &mut R,
) -> Result<TrainingObservation, EstimatorError> {
    check_codebook_fits(q.matrix(), cb)?;
    let p = lb.tx_power_w();
    let noise = complex_noise(q.matrix().rows(), cb.t_slots(), lb.noise_power_w(), rng);
    let y = &cb.right_multiply(q.matrix()).scale_real(p.sqrt()) + &noise;
    Ok(TrainingObservation {
        y,
        codebook_id: cb.id(),
        tx_power_w: p,
    })
}

#[derive(Debug, Clone)]
enum Solver {
    /// `Phi^+ = Phi^H / M`.
    Orthogonal { m: f64 },
    /// Precomputed `Phi^H (Phi Phi^H)^{-1}`.
    General { pinv: CMatrix },
}

/// LS estimator bound to one codebook, reusable across observations.
#[derive(Debug, Clone)]
pub struct LsEstimator<'a> {
    cb: &'a TrainingCodebook,
    solver: Solver,
    mse_factor: f64,
}

impl<'a> LsEstimator<'a> {
    /// Uses the inversion-free path for DFT/Hadamard codebooks and a
    /// Cholesky-based pseudo-inverse otherwise.
    pub fn new(cb: &'a TrainingCodebook) -> Result<Self, EstimatorError> {
        if cb.kind().is_orthogonal() {
            Ok(Self {
                cb,
                solver: Solver::Orthogonal {
                    m: cb.topology().m() as f64,
                },
                mse_factor: codebook_mse_factor(cb)?,
            })
        } else {
            Self::general(cb)
        }
    }

    /// Always goes through `(Phi Phi^H)^{-1}`.
    pub fn general(cb: &'a TrainingCodebook) -> Result<Self, EstimatorError> {
        let phi = cb.phi_hat();
        let gram = phi.matmul_adjoint(phi);
        let factor = HermitianFactor::new(&gram)?;
        let inv = factor.inverse();
        Ok(Self {
            cb,
            solver: Solver::General {
                pinv: phi.adjoint_matmul(&inv),
            },
            mse_factor: factor.inverse_trace(),
        })
    }

    pub fn codebook(&self) -> &TrainingCodebook {
        self.cb
    }

    /// `tr((Phi Phi^H)^{-1})` of the bound codebook.
    pub fn mse_factor(&self) -> f64 {
        self.mse_factor
    }

    pub fn is_inversion_free(&self) -> bool {
        matches!(self.solver, Solver::Orthogonal { .. })
    }

    /// `Y Phi^+ / sqrt(P)` for any number of stacked rows.
    pub fn estimate_matrix(&self, y: &CMatrix, tx_power_w: f64) -> CMatrix {
        assert_eq!(
            y.cols(),
            self.cb.t_slots(),
            "observation length differs from the codebook"
        );
        let s = 1.0 / tx_power_w.sqrt();
        match &self.solver {
            Solver::Orthogonal { m } => self.cb.right_multiply_adjoint(y).scale_real(s / m),
            Solver::General { pinv } => y.matmul(pinv).scale_real(s),
        }
    }

    pub fn estimate(&self, obs: &TrainingObservation) -> Result<CascadedChannel, EstimatorError> {
        if obs.codebook_id != self.cb.id() {
            return Err(EstimatorError::Shape(format!(
                "observation was taken with {}, estimator uses {}",
                obs.codebook_id,
                self.cb.id()
            )));
        }
        if obs.y.cols() != self.cb.t_slots() {
            return Err(EstimatorError::Shape(format!(
                "observation has {} slots, codebook has {}",
                obs.y.cols(),
                self.cb.t_slots()
            )));
        }
        let top = self.cb.topology();
        let q = self.estimate_matrix(&obs.y, obs.tx_power_w);
        CascadedChannel::new(q, top.g(), top.m_bar()).map_err(|e| EstimatorError::Shape(e.to_string()))
    }
}

/// One-shot LS estimate; build an [`LsEstimator`] to amortize the setup.
pub fn ls_estimate(obs: &TrainingObservation, cb: &TrainingCodebook) -> Result<CascadedChannel, EstimatorError> {
    LsEstimator::new(cb)?.estimate(obs)
}

/// Closed-form MSE `N sigma^2 / P * tr((Phi Phi^H)^{-1})`.
pub fn theoretical_mse(cb: &TrainingCodebook, lb: &LinkBudget, n_bs: usize) -> Result<f64, EstimatorError> {
    Ok(noise_to_power(lb, n_bs) * codebook_mse_factor(cb)?)
}

/// Minimum achievable MSE `N sigma^2 Mbar / P`.
pub fn mse_lower_bound(lb: &LinkBudget, n_bs: usize, m_bar: usize) -> f64 {
    noise_to_power(lb, n_bs) * m_bar as f64
}

fn noise_to_power(lb: &LinkBudget, n_bs: usize) -> f64 {
    n_bs as f64 * lb.noise_power_w() / lb.tx_power_w()
}

// Rows of stacked observations per dense product.
const BATCH_ROWS: usize = 128;

/// Averages `||Qhat - Q||_F^2` over `n_trials` independent channel and noise
/// draws. Trial `i` is seeded from `(base_seed, i)` alone.
pub fn run_trials(
    est: &LsEstimator<'_>,
    top: &GroupTopology,
    lb: &LinkBudget,
    n_trials: usize,
    base_seed: u64,
) -> Result<MseRecord, EstimatorError> {
    let cb = est.codebook();
    if cb.topology().g() != top.g() || cb.topology().m_bar() != top.m_bar() {
        return Err(EstimatorError::Shape(format!(
            "codebook {} does not match topology {top}",
            cb.id()
        )));
    }
    if n_trials == 0 {
        return Err(EstimatorError::Shape("at least one trial is required".into()));
    }
    let n = top.n_bs();
    let cols = top.t_min();
    let t_slots = cb.t_slots();
    let p = lb.tx_power_w();
    let sigma2 = lb.noise_power_w();
    let batch = (BATCH_ROWS / n).max(1);

    let mut errors = Vec::with_capacity(n_trials);
    for start in (0..n_trials).step_by(batch) {
        let count = batch.min(n_trials - start);
        let mut q_stack = CMatrix::zeros(count * n, cols);
        let mut noise_stack = CMatrix::zeros(count * n, t_slots);
        for b in 0..count {
            let mut rng = rng_for(base_seed, &[(start + b) as u64]);
            let ch = draw_channels(top, lb, &mut rng);
            let q = cascade(top, &ch);
            let noise = complex_noise(n, t_slots, sigma2, &mut rng);
            copy_rows(&mut q_stack, b * n, q.matrix());
            copy_rows(&mut noise_stack, b * n, &noise);
        }
        let y = &cb.right_multiply(&q_stack).scale_real(p.sqrt()) + &noise_stack;
        let q_hat = est.estimate_matrix(&y, p);
        let diff = &q_hat - &q_stack;
        for b in 0..count {
            let err: f64 = (0..cols)
                .map(|j| {
                    diff.column(j)[b * n..(b + 1) * n]
                        .iter()
                        .map(|z| z.norm_sqr())
                        .sum::<f64>()
                })
                .sum();
            errors.push(err);
        }
    }

    let mean = errors.iter().sum::<f64>() / n_trials as f64;
    let std_error = if n_trials > 1 {
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n_trials - 1) as f64;
        (var / n_trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(MseRecord {
        tx_power_dbm: lb.tx_power_dbm,
        g: top.g(),
        m_bar: top.m_bar(),
        strategy: cb.kind(),
        empirical_mse: mean,
        empirical_std_error: std_error,
        theoretical_mse: noise_to_power(lb, n) * est.mse_factor(),
        lower_bound: mse_lower_bound(lb, n, top.m_bar()),
        n_trials,
    })
}

/// Monte Carlo MSE of the LS estimator; per-trial seeds derive from one draw
/// of `rng`.
pub fn empirical_mse<R: RngCore + ?Sized>(
    top: &GroupTopology,
    lb: &LinkBudget,
    cb: &TrainingCodebook,
    n_trials: usize,
    rng: &mut R,
) -> Result<MseRecord, EstimatorError> {
    let est = LsEstimator::new(cb)?;
    run_trials(&est, top, lb, n_trials, rng.next_u64())
}

fn copy_rows(dst: &mut CMatrix, row0: usize, src: &CMatrix) {
    for j in 0..src.cols() {
        dst.column_mut(j)[row0..row0 + src.rows()].copy_from_slice(src.column(j));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_codebook, random_codebook};
    use crate::seed::SimRng;
    use rand::SeedableRng;

    fn top(g: usize, m_bar: usize) -> GroupTopology {
        GroupTopology::new(4, g, m_bar).unwrap()
    }

    fn noiseless() -> LinkBudget {
        LinkBudget::default().with_noise_power_dbm(f64::NEG_INFINITY)
    }

    fn channel(t: &GroupTopology, seed: u64) -> CascadedChannel {
        cascade(
            t,
            &draw_channels(t, &LinkBudget::default(), &mut SimRng::seed_from_u64(seed)),
        )
    }

    #[test]
    fn noiseless_training_is_the_clean_product() {
        let t = top(2, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let q = channel(&t, 1);
        let lb = noiseless().with_tx_power_dbm(20.0);
        let obs = simulate_training(&q, &cb, &lb, &mut SimRng::seed_from_u64(2)).unwrap();
        let clean = q.matrix().matmul(cb.phi_hat()).scale_real(lb.tx_power_w().sqrt());
        assert!(obs.y.max_abs_diff(&clean) <= 1e-14 * clean.max_abs());
    }

    #[test]
    fn noise_only_training_has_noise_power() {
        let t = GroupTopology::new(64, 1, 16).unwrap();
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let zero = CascadedChannel::new(CMatrix::zeros(64, 256), 1, 16).unwrap();
        let lb = LinkBudget::default();
        let obs = simulate_training(&zero, &cb, &lb, &mut SimRng::seed_from_u64(3)).unwrap();
        let power = obs.y.frobenius_norm_sqr() / (64.0 * 256.0);
        assert!((power / lb.noise_power_w() - 1.0).abs() < 0.02, "{power}");
    }

    #[test]
    fn training_is_seed_deterministic() {
        let t = top(2, 2);
        let cb = build_codebook(t, BaseKind::Hadamard).unwrap();
        let q = channel(&t, 5);
        let lb = LinkBudget::default();
        let a = simulate_training(&q, &cb, &lb, &mut SimRng::seed_from_u64(6)).unwrap();
        let b = simulate_training(&q, &cb, &lb, &mut SimRng::seed_from_u64(6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_recovery_for_every_kind() {
        let t = top(2, 2);
        let mut rng = SimRng::seed_from_u64(9);
        let codebooks = [
            build_codebook(t, BaseKind::Dft).unwrap(),
            build_codebook(t, BaseKind::Hadamard).unwrap(),
            random_codebook(t, &mut rng),
        ];
        for cb in &codebooks {
            let q = channel(&t, 10);
            let obs = simulate_training(&q, cb, &noiseless(), &mut rng).unwrap();
            let q_hat = ls_estimate(&obs, cb).unwrap();
            let rel = (q_hat.matrix() - q.matrix()).frobenius_norm() / q.matrix().frobenius_norm();
            assert!(rel <= 1e-9, "{}: {rel}", cb.id());
        }
    }

    #[test]
    fn fast_path_agrees_with_general_solve() {
        let t = top(4, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let fast = LsEstimator::new(&cb).unwrap();
        let general = LsEstimator::general(&cb).unwrap();
        assert!(fast.is_inversion_free() && !general.is_inversion_free());
        let q = channel(&t, 12);
        let obs = simulate_training(&q, &cb, &LinkBudget::default(), &mut SimRng::seed_from_u64(13)).unwrap();
        let a = fast.estimate(&obs).unwrap();
        let b = general.estimate(&obs).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-11 * a.matrix().max_abs());
    }

    #[test]
    fn mismatched_observation_is_rejected() {
        let t = top(2, 2);
        let dft = build_codebook(t, BaseKind::Dft).unwrap();
        let had = build_codebook(t, BaseKind::Hadamard).unwrap();
        let q = channel(&t, 1);
        let obs = simulate_training(&q, &dft, &LinkBudget::default(), &mut SimRng::seed_from_u64(1)).unwrap();
        assert!(matches!(ls_estimate(&obs, &had), Err(EstimatorError::Shape(_))));
        let other = build_codebook(top(4, 1), BaseKind::Dft).unwrap();
        let q_small = channel(&top(2, 2), 1);
        assert!(simulate_training(&q_small, &other, &LinkBudget::default(), &mut SimRng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn theoretical_mse_values() {
        let t = top(2, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        // sigma^2 = 1e-13 W (-100 dBm), P = 1 W (30 dBm), N = 4, Mbar = 2
        let lb = LinkBudget::default().with_tx_power_dbm(30.0);
        let e = theoretical_mse(&cb, &lb, 4).unwrap();
        assert!((e - 8e-13).abs() < 1e-24, "{e}");
        assert!((e - mse_lower_bound(&lb, 4, 2)).abs() < 1e-24);
        let doubled = theoretical_mse(&cb, &lb.with_tx_power_dbm(30.0 + 10.0 * 2f64.log10()), 4).unwrap();
        assert!((doubled / e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_noiseless_trial_has_negligible_error() {
        let t = top(16, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let lb = noiseless();
        let rec = empirical_mse(&t, &lb, &cb, 1, &mut SimRng::seed_from_u64(0)).unwrap();
        let q_energy = channel(&t, 0).matrix().frobenius_norm_sqr();
        assert!(rec.empirical_mse <= 1e-24 * q_energy, "{}", rec.empirical_mse);
        assert_eq!(rec.theoretical_mse, 0.0);
        assert_eq!(rec.n_trials, 1);
    }

    #[test]
    fn empirical_tracks_theory_for_dft() {
        let t = top(8, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let lb = LinkBudget::default().with_tx_power_dbm(10.0);
        let rec = empirical_mse(&t, &lb, &cb, 1000, &mut SimRng::seed_from_u64(21)).unwrap();
        assert!((rec.empirical_mse / rec.theoretical_mse - 1.0).abs() < 0.03, "{rec:?}");
        assert!((rec.theoretical_mse / rec.lower_bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_codebook_stays_above_bound() {
        let t = top(2, 2);
        let mut rng = SimRng::seed_from_u64(22);
        let cb = random_codebook(t, &mut rng);
        let lb = LinkBudget::default().with_tx_power_dbm(10.0);
        let rec = empirical_mse(&t, &lb, &cb, 1000, &mut rng).unwrap();
        assert!(rec.empirical_mse >= rec.lower_bound * 0.97, "{rec:?}");
        assert!(rec.theoretical_mse > rec.lower_bound);
    }

    #[test]
    fn zero_trials_and_topology_mismatch_are_errors() {
        let t = top(2, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let lb = LinkBudget::default();
        let mut rng = SimRng::seed_from_u64(0);
        assert!(empirical_mse(&t, &lb, &cb, 0, &mut rng).is_err());
        assert!(empirical_mse(&top(4, 1), &lb, &cb, 1, &mut rng).is_err());
    }
}
