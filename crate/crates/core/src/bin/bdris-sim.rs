use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;

use bdris::channel::{draw_channels, write_channel_csv};
use bdris::codebook::{write_binary, write_csv, BaseKind};
use bdris::harness::{
    report_overhead, run_sweep, sweep_codebook, validate_codebook_cmd, write_records_csv, Architecture,
    ExperimentConfig, PowerSweep,
};
use bdris::linalg::DEFAULT_TOL;
use bdris::seed::rng_for;

// Validation failures and runtime errors.
const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Monte Carlo MSE of least-squares cascaded-channel estimation for
/// group-connected BD-RIS, plus codebook export and validation.
#[derive(Debug, Parser)]
#[command(name = "bdris-sim", version)]
struct Cli {
    /// Flat `key = value` experiment file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for codebook, channel and noise draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per (power, architecture, strategy) cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Sweep CSV destination; `-` or absent means stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Transmit powers in dBm as `start:stop:step` or a single value.
    #[arg(long, allow_hyphen_values = true)]
    powers: Option<PowerSweep>,
    /// Architecture `GxMbar`; repeat for several.
    #[arg(long = "arch")]
    arch: Vec<Architecture>,
    /// dft, hadamard or random; repeat for several.
    #[arg(long = "strategy")]
    strategy: Vec<BaseKind>,
    /// Write the codebook of the single selected architecture and strategy
    /// (`.csv` extension selects CSV, anything else the binary format).
    #[arg(long, value_name = "PATH")]
    export_codebook: Option<PathBuf>,
    /// Check a codebook file against the training constraints.
    #[arg(long, value_name = "PATH")]
    validate: Option<PathBuf>,
    /// Tolerance for --validate.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write one channel realization (G then h) for the first architecture.
    #[arg(long, value_name = "PATH")]
    dump_channel: Option<PathBuf>,
}

impl Cli {
    fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.n_trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.output = (out.as_os_str() != "-").then(|| out.clone());
        }
        if let Some(powers) = self.powers {
            cfg.powers = powers;
        }
        if !self.arch.is_empty() {
            cfg.architectures = self.arch.clone();
        }
        if !self.strategy.is_empty() {
            cfg.strategies = self.strategy.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn export_codebook(cfg: &ExperimentConfig, path: &Path) -> anyhow::Result<()> {
    let ([arch], [strategy]) = (cfg.architectures.as_slice(), cfg.strategies.as_slice()) else {
        bail!("--export-codebook needs exactly one architecture and one strategy");
    };
    let cb = sweep_codebook(arch.topology(cfg.n_bs), *strategy, cfg.master_seed, 0, 0)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_csv(&cb, file)?;
    } else {
        write_binary(&cb, file)?;
    }
    eprintln!("wrote {} ({} slots) to {}", cb.id(), cb.t_slots(), path.display());
    Ok(())
}

fn dump_channel(cfg: &ExperimentConfig, path: &Path) -> anyhow::Result<()> {
    let top = cfg.architectures[0].topology(cfg.n_bs);
    let ch = draw_channels(&top, &cfg.link, &mut rng_for(cfg.master_seed, &[u64::MAX]));
    write_channel_csv(
        &ch,
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    )?;
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    for arch in &cfg.architectures {
        let (t_min, factor) = report_overhead(&arch.topology(cfg.n_bs));
        eprintln!(
            "G={:<3} Mbar={:<3} training slots {t_min:>5}, MSE bound {factor} x N sigma^2 / P",
            arch.g, arch.m_bar
        );
    }
    let records = run_sweep(cfg)?;
    match &cfg.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_records_csv(&records, file)?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => write_records_csv(&records, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(path) = &cli.validate {
        return match validate_codebook_cmd(path, cli.tol) {
            Ok(report) => {
                println!("{report}");
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_FAILURE)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_FAILURE)
            }
        };
    }

    let cfg = match cli.experiment() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let result = if let Some(path) = &cli.export_codebook {
        export_codebook(&cfg, path).map_err(|e| (EXIT_CONFIG, e))
    } else {
        let dumped = match &cli.dump_channel {
            Some(path) => dump_channel(&cfg, path),
            None => Ok(()),
        };
        dumped.and_then(|()| sweep(&cfg)).map_err(|e| (EXIT_FAILURE, e))
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
