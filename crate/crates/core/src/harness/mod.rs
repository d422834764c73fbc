//! Seeded power sweeps over architectures and codebook strategies, CSV
//! emission, and the codebook export/validation plumbing used by the CLI.
//!
//! Cell `(power p, architecture a, strategy s)` draws its trials from
//! `derive_seed(master, [p, a, s])`; a random codebook for `(a, s)` comes from
//! `derive_seed(master, [RANDOM_CODEBOOK_TAG, a, s])` and is shared across the
//! power grid. Cells therefore never share random streams and can be
//! evaluated in any order.

mod config;

pub use config::{Architecture, ConfigError, ExperimentConfig, PowerSweep};

use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::codebook::{
    build_codebook, random_codebook, read_codebook, validate_codebook, BaseKind, CodebookError, GroupTopology,
    TrainingCodebook, ValidationReport,
};
use crate::estimator::{run_trials, EstimatorError, LsEstimator, MseRecord};
use crate::linalg::LinalgError;
use crate::seed::{derive_seed, rng_for};

pub const CSV_HEADER: &str = "power_dbm,G,M_bar,strategy,empirical_mse,theoretical_mse,lower_bound,n_trials";

const RANDOM_CODEBOOK_TAG: u64 = 0x5244_4d43_4f44_4542;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Training length `G*Mbar^2` and the MSE multiplier `Mbar` of the optimal codebook.
pub fn report_overhead(top: &GroupTopology) -> (usize, f64) {
    (top.t_min(), top.m_bar() as f64)
}

/// Builds the codebook a sweep uses for `(arch_index, strategy)`.
///
/// Hadamard exists only for power-of-two orders; other orders fall back to
/// DFT (which attains the same bound) with a warning on stderr. The returned
/// codebook then reports kind `Dft`.
pub fn sweep_codebook(
    top: GroupTopology,
    strategy: BaseKind,
    master_seed: u64,
    arch_index: usize,
    strategy_index: usize,
) -> Result<TrainingCodebook, CodebookError> {
    match strategy {
        BaseKind::RandomUnitary => {
            let mut rng = rng_for(
                master_seed,
                &[RANDOM_CODEBOOK_TAG, arch_index as u64, strategy_index as u64],
            );
            Ok(random_codebook(top, &mut rng))
        }
        BaseKind::Hadamard => match build_codebook(top, BaseKind::Hadamard) {
            Err(CodebookError::Linalg(LinalgError::UnsupportedOrder(n))) => {
                eprintln!(
                    "warning: no Hadamard matrix of order {n} for G={} Mbar={}; using DFT",
                    top.g(),
                    top.m_bar()
                );
                build_codebook(top, BaseKind::Dft)
            }
            other => other,
        },
        BaseKind::Dft => build_codebook(top, BaseKind::Dft),
    }
}

/// One record per `(power, architecture, strategy)`. Records are grouped by
/// power; inside a group they follow the config's architecture and strategy order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<MseRecord>, HarnessError> {
    cfg.validate()?;
    let mut codebooks = Vec::new();
    for (a, arch) in cfg.architectures.iter().enumerate() {
        let top = arch.topology(cfg.n_bs);
        for (s, &strategy) in cfg.strategies.iter().enumerate() {
            codebooks.push((top, strategy, sweep_codebook(top, strategy, cfg.master_seed, a, s)?));
        }
    }
    let estimators = codebooks
        .iter()
        .map(|(_, _, cb)| LsEstimator::new(cb))
        .collect::<Result<Vec<_>, _>>()?;

    let n_strategies = cfg.strategies.len();
    let mut records = Vec::new();
    for (p, power) in cfg.powers.points().into_iter().enumerate() {
        let lb = cfg.link_at(power);
        for (idx, ((top, strategy, _), est)) in codebooks.iter().zip(&estimators).enumerate() {
            let (a, s) = (idx / n_strategies, idx % n_strategies);
            let seed = derive_seed(cfg.master_seed, &[p as u64, a as u64, s as u64]);
            let mut rec = run_trials(est, top, &lb, cfg.n_trials, seed)?;
            rec.strategy = *strategy;
            records.push(rec);
        }
    }
    Ok(records)
}

/// Writes the sweep CSV; floats carry 10 significant digits.
pub fn write_records_csv<W: Write>(records: &[MseRecord], out: W) -> io::Result<()> {
    let mut w = io::BufWriter::new(out);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{:.9e},{},{},{},{:.9e},{:.9e},{:.9e},{}",
            r.tx_power_dbm, r.g, r.m_bar, r.strategy, r.empirical_mse, r.theoretical_mse, r.lower_bound, r.n_trials
        )?;
    }
    w.flush()
}

/// Reads a codebook file and checks every constraint at `tol`.
pub fn validate_codebook_cmd(path: &Path, tol: f64) -> Result<ValidationReport, HarnessError> {
    let cb = read_codebook(path)?;
    Ok(validate_codebook(&cb, tol))
}
