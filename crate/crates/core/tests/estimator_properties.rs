use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bdris::channel::{cascade, draw_channels, CascadedChannel, LinkBudget};
use bdris::codebook::{build_codebook, random_codebook, BaseKind, GroupTopology};
use bdris::estimator::{run_trials, simulate_training, LsEstimator};
use bdris::linalg::CMatrix;

fn top(g: usize, m_bar: usize) -> GroupTopology {
    GroupTopology::new(4, g, m_bar).unwrap()
}

#[test]
fn ls_estimate_is_unbiased() {
    let t = top(2, 2);
    let cb = build_codebook(t, BaseKind::Dft).unwrap();
    let est = LsEstimator::new(&cb).unwrap();
    let lb = LinkBudget::default().with_tx_power_dbm(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n = 10_000;
    let (rows, cols) = (t.n_bs(), t.t_min());
    let mut sum = vec![Complex64::new(0.0, 0.0); rows * cols];
    let mut sum_sq = vec![0.0; rows * cols];
    for _ in 0..n {
        let q = cascade(&t, &draw_channels(&t, &lb, &mut rng));
        let obs = simulate_training(&q, &cb, &lb, &mut rng).unwrap();
        let err = est.estimate(&obs).unwrap().matrix() - q.matrix();
        for (k, e) in err.as_slice().iter().enumerate() {
            sum[k] += e;
            sum_sq[k] += e.norm_sqr();
        }
    }
    let nf = n as f64;
    for k in 0..rows * cols {
        let mean = sum[k] / nf;
        let var = (sum_sq[k] - nf * mean.norm_sqr()) / (nf - 1.0);
        let se = (var / nf).sqrt();
        assert!(
            mean.norm() <= 3.0 * se,
            "entry {k}: |mean| {:e} vs 3 SE {:e}",
            mean.norm(),
            3.0 * se
        );
    }
}

#[test]
fn noise_only_estimate_energy_matches_the_bound() {
    let t = top(4, 2);
    let cb = build_codebook(t, BaseKind::Hadamard).unwrap();
    let est = LsEstimator::new(&cb).unwrap();
    let lb = LinkBudget::default().with_tx_power_dbm(10.0);
    let zero = CascadedChannel::new(CMatrix::zeros(4, t.t_min()), 4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let n = 10_000;
    let total: f64 = (0..n)
        .map(|_| {
            let obs = simulate_training(&zero, &cb, &lb, &mut rng).unwrap();
            est.estimate(&obs).unwrap().matrix().frobenius_norm_sqr()
        })
        .sum();
    let expected = 4.0 * lb.noise_power_w() * 2.0 / lb.tx_power_w();
    assert!((total / n as f64 / expected - 1.0).abs() < 0.03);
}

#[test]
fn mse_does_not_depend_on_the_channel() {
    let t = top(8, 2);
    let cb = build_codebook(t, BaseKind::Dft).unwrap();
    let est = LsEstimator::new(&cb).unwrap();
    let lb = LinkBudget::default().with_tx_power_dbm(5.0);
    let mut silent = lb;
    silent.zeta0_db = f64::NEG_INFINITY;
    let with_q = run_trials(&est, &t, &lb, 2000, 1).unwrap();
    let without_q = run_trials(&est, &t, &silent, 2000, 2).unwrap();
    let gap = (with_q.empirical_mse - without_q.empirical_mse).abs();
    let se = with_q.empirical_std_error.hypot(without_q.empirical_std_error);
    assert!(gap <= 4.0 * se, "{gap:e} vs SE {se:e}");
    assert!(gap / with_q.theoretical_mse < 0.03);
}

#[test]
fn mse_falls_one_decade_per_ten_db() {
    let t = top(16, 2);
    let cb = build_codebook(t, BaseKind::Dft).unwrap();
    let est = LsEstimator::new(&cb).unwrap();
    let points: Vec<_> = [0.0, 10.0, 20.0]
        .iter()
        .map(|&p| run_trials(&est, &t, &LinkBudget::default().with_tx_power_dbm(p), 1000, 7).unwrap())
        .collect();
    for w in points.windows(2) {
        let theory = w[1].theoretical_mse.log10() - w[0].theoretical_mse.log10();
        let empirical = w[1].empirical_mse.log10() - w[0].empirical_mse.log10();
        assert!((theory + 1.0).abs() < 1e-12, "{theory}");
        assert!((empirical + 1.0).abs() < 0.02, "{empirical}");
    }
}

#[test]
fn mse_scales_with_group_size() {
    let lb = LinkBudget::default().with_tx_power_dbm(20.0);
    let mse = |g, m_bar| {
        let t = top(g, m_bar);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        run_trials(&LsEstimator::new(&cb).unwrap(), &t, &lb, 1000, 11)
            .unwrap()
            .empirical_mse
    };
    let base = mse(32, 1);
    assert!((mse(16, 2) / base / 2.0 - 1.0).abs() < 0.03);
    assert!((mse(1, 32) / base / 32.0 - 1.0).abs() < 0.03);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn records_respect_the_bound(g in 1usize..4, m_bar in 1usize..4, power in -10.0f64..40.0, seed in any::<u64>(), random in any::<bool>()) {
        let t = top(g, m_bar);
        let cb = if random {
            random_codebook(t, &mut ChaCha8Rng::seed_from_u64(seed))
        } else {
            build_codebook(t, BaseKind::Dft).unwrap()
        };
        let est = LsEstimator::new(&cb).unwrap();
        let rec = run_trials(&est, &t, &LinkBudget::default().with_tx_power_dbm(power), 3, seed).unwrap();
        prop_assert!(rec.lower_bound <= rec.theoretical_mse + 1e-12);
        prop_assert!(rec.empirical_mse >= 0.0 && rec.lower_bound >= 0.0);
        prop_assert_eq!(rec.n_trials, 3);
    }

    #[test]
    fn runs_are_reproducible(n_trials in 1usize..70, seed in any::<u64>()) {
        let t = top(2, 2);
        let cb = build_codebook(t, BaseKind::Dft).unwrap();
        let est = LsEstimator::new(&cb).unwrap();
        let lb = LinkBudget::default();
        let a = run_trials(&est, &t, &lb, n_trials, seed).unwrap();
        let b = run_trials(&est, &t, &lb, n_trials, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
