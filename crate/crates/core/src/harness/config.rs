//! Experiment configuration: a flat `key = value` file with `#` comments.
//!
//! ```text
//! n_bs = 4
//! arch = 32x1, 16x2, 1x32
//! strategies = dft, hadamard, random
//! powers = 0:50:5
//! n_trials = 1000
//! seed = 1
//! output = mse.csv
//! noise_power_dbm = -100
//! zeta0_db = -30
//! d0_m = 1
//! d_bi_m = 50
//! d_iu_m = 10
//! epsilon = 2.2
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::channel::LinkBudget;
use crate::codebook::{BaseKind, GroupTopology};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// `G` groups of `Mbar` ports, written `GxMbar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub g: usize,
    pub m_bar: usize,
}

impl Architecture {
    pub fn topology(&self, n_bs: usize) -> GroupTopology {
        GroupTopology::new(n_bs, self.g, self.m_bar).expect("architectures are validated on parse")
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.g, self.m_bar)
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (g, m_bar) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("`{s}` is not of the form GxMbar"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{s}` is not of the form GxMbar"))
        };
        let (g, m_bar) = (parse(g)?, parse(m_bar)?);
        if g == 0 || m_bar == 0 {
            return Err(format!("`{s}`: group count and size must be positive"));
        }
        Ok(Architecture { g, m_bar })
    }
}

/// Inclusive transmit-power grid `start:stop:step` in dBm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerSweep {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn check(&self) -> Result<(), String> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(format!("step must be positive, got {}", self.step));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(format!("need finite start <= stop, got {}:{}", self.start, self.stop));
        }
        Ok(())
    }
}

impl Default for PowerSweep {
    fn default() -> Self {
        PowerSweep {
            start: 0.0,
            stop: 50.0,
            step: 5.0,
        }
    }
}

impl FromStr for PowerSweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let sweep = match parts.as_slice() {
            [p] => {
                let p = num(p)?;
                PowerSweep {
                    start: p,
                    stop: p,
                    step: 1.0,
                }
            }
            [a, b, c] => PowerSweep {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => return Err(format!("`{s}` is not start:stop:step or a single power")),
        };
        sweep.check()?;
        Ok(sweep)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_bs: usize,
    pub architectures: Vec<Architecture>,
    pub strategies: Vec<BaseKind>,
    pub powers: PowerSweep,
    /// Propagation and noise settings; its transmit power is overridden per sweep point.
    pub link: LinkBudget,
    pub n_trials: usize,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_bs: 4,
            architectures: vec![
                Architecture { g: 32, m_bar: 1 },
                Architecture { g: 16, m_bar: 2 },
                Architecture { g: 1, m_bar: 32 },
            ],
            strategies: BaseKind::ALL.to_vec(),
            powers: PowerSweep::default(),
            link: LinkBudget::default(),
            n_trials: 1000,
            master_seed: 1,
            output: None,
        }
    }
}

fn list<T: FromStr<Err = String>>(field: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| v.trim().parse::<T>().map_err(|e| ConfigError::field(field, e)))
        .collect()
}

fn scalar<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::field(field, format!("cannot parse `{}`", value.trim())))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Starts from the defaults and applies every `key = value` line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, found `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n_bs" => self.n_bs = scalar(key, value)?,
            "arch" | "architectures" => self.architectures = list(key, value)?,
            "strategy" | "strategies" => self.strategies = list(key, value)?,
            "powers" | "power_sweep_dbm" => self.powers = value.parse().map_err(|e| ConfigError::field(key, e))?,
            "n_trials" | "trials" => self.n_trials = scalar(key, value)?,
            "seed" | "master_seed" => self.master_seed = scalar(key, value)?,
            "output" | "out" => self.output = Some(PathBuf::from(value)),
            "noise_power_dbm" => self.link.noise_power_dbm = scalar(key, value)?,
            "zeta0_db" => self.link.zeta0_db = scalar(key, value)?,
            "d0_m" => self.link.d0_m = scalar(key, value)?,
            "d_bi_m" => self.link.d_bi_m = scalar(key, value)?,
            "d_iu_m" => self.link.d_iu_m = scalar(key, value)?,
            "epsilon" => self.link.epsilon = scalar(key, value)?,
            _ => return Err(ConfigError::field(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_bs == 0 {
            return Err(ConfigError::field("n_bs", "must be at least 1"));
        }
        if self.n_trials == 0 {
            return Err(ConfigError::field("n_trials", "must be at least 1"));
        }
        if self.architectures.is_empty() {
            return Err(ConfigError::field("arch", "at least one architecture is required"));
        }
        if self.strategies.is_empty() {
            return Err(ConfigError::field("strategies", "at least one strategy is required"));
        }
        let m = self.architectures[0].g * self.architectures[0].m_bar;
        if let Some(a) = self.architectures.iter().find(|a| a.g * a.m_bar != m) {
            return Err(ConfigError::field(
                "arch",
                format!(
                    "{a} has {} elements but {} has {m}",
                    a.g * a.m_bar,
                    self.architectures[0]
                ),
            ));
        }
        self.powers.check().map_err(|e| ConfigError::field("powers", e))?;
        self.link
            .validate()
            .map_err(|f| ConfigError::field(f, "out of range"))?;
        Ok(())
    }

    /// The link budget at one sweep point.
    pub fn link_at(&self, tx_power_dbm: f64) -> LinkBudget {
        self.link.with_tx_power_dbm(tx_power_dbm)
    }
}
