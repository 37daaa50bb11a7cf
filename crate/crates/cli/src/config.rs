use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nestlab::nest::DEFAULT_MAX_ITER;
use nestlab::polynomial::{DEFAULT_PRECISION, MIN_PRECISION};
use thiserror::Error;

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_STEPS: usize = 200;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("invalid setting {key}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// Settings shared by every command. Each field is unset unless a flag,
/// an environment variable or the config file supplies it.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Settings {
    /// Working precision in bits
    #[arg(long, global = true, env = "NESTLAB_PRECISION_BITS")]
    pub precision_bits: Option<u32>,
    /// Nest depth
    #[arg(long, global = true, env = "NESTLAB_DEPTH")]
    pub depth: Option<usize>,
    /// Iteration budget for a single return
    #[arg(long, global = true, env = "NESTLAB_MAX_ITER")]
    pub max_iter: Option<u64>,
    /// Number of walk samples
    #[arg(long, global = true, env = "NESTLAB_SAMPLES")]
    pub samples: Option<usize>,
    /// Steps per walk sample
    #[arg(long, global = true, env = "NESTLAB_STEPS")]
    pub steps: Option<usize>,
    #[arg(long, global = true, env = "NESTLAB_SEED")]
    pub seed: Option<u64>,
    /// Fibonacci increment of the ledger (default: initial norm / 32)
    #[arg(long, global = true, env = "NESTLAB_ETA")]
    pub eta: Option<f64>,
    /// Initial separation of the ledger
    #[arg(long, global = true, env = "NESTLAB_TAU")]
    pub tau: Option<f64>,
    #[arg(long, global = true, value_enum, env = "NESTLAB_FORMAT")]
    pub format: Option<OutputFormat>,
    /// Write output here instead of stdout
    #[arg(long, global = true, env = "NESTLAB_OUT")]
    pub out: Option<PathBuf>,
    /// key=value file consulted after flags and environment
    #[arg(long, global = true, env = "NESTLAB_CONFIG")]
    pub config: Option<PathBuf>,
}

impl Settings {
    /// Fills unset fields from `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            precision_bits: self.precision_bits.or(lower.precision_bits),
            depth: self.depth.or(lower.depth),
            max_iter: self.max_iter.or(lower.max_iter),
            samples: self.samples.or(lower.samples),
            steps: self.steps.or(lower.steps),
            seed: self.seed.or(lower.seed),
            eta: self.eta.or(lower.eta),
            tau: self.tau.or(lower.tau),
            format: self.format.or(lower.format),
            out: self.out.or(lower.out),
            config: self.config.or(lower.config),
        }
    }

    /// Parses `key=value` lines. Blank lines and lines starting with `#`
    /// are skipped; keys use the flag names with `_` or `-`.
    pub fn parse_file(text: &str, path: &Path) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ConfigError::Parse { path: path.to_path_buf(), line: idx + 1, message };
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected key=value, got '{line}'")));
            };
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
            where
                T::Err: std::fmt::Display,
            {
                v.parse::<T>().map_err(|e| format!("bad value '{v}': {e}"))
            }
            match key.as_str() {
                "precision_bits" => s.precision_bits = Some(num(value).map_err(err)?),
                "depth" => s.depth = Some(num(value).map_err(err)?),
                "max_iter" => s.max_iter = Some(num(value).map_err(err)?),
                "samples" => s.samples = Some(num(value).map_err(err)?),
                "steps" => s.steps = Some(num(value).map_err(err)?),
                "seed" => s.seed = Some(num(value).map_err(err)?),
                "eta" => s.eta = Some(num(value).map_err(err)?),
                "tau" => s.tau = Some(num(value).map_err(err)?),
                "format" => s.format = Some(OutputFormat::from_str(value, true).map_err(err)?),
                "out" => s.out = Some(PathBuf::from(value)),
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        Ok(s)
    }

    pub fn load_file(path: &Path) -> Result<Settings, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Settings::parse_file(&text, path)
    }
}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub precision_bits: u32,
    /// `None` lets each command pick its own default.
    pub depth: Option<usize>,
    pub max_iter: u64,
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    /// `None` means the ledger default.
    pub eta: Option<f64>,
    pub tau: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision_bits: DEFAULT_PRECISION,
            depth: None,
            max_iter: DEFAULT_MAX_ITER,
            samples: DEFAULT_SAMPLES,
            steps: DEFAULT_STEPS,
            seed: DEFAULT_SEED,
            eta: None,
            tau: DEFAULT_TAU,
            format: OutputFormat::Json,
            out: None,
        }
    }
}

impl RunConfig {
    /// Flags and environment first, then the config file, then defaults.
    pub fn resolve(cli: Settings) -> Result<RunConfig, ConfigError> {
        let merged = match cli.config.clone() {
            Some(path) => cli.or(Settings::load_file(&path)?),
            None => cli,
        };
        RunConfig::from_settings(merged)
    }

    pub fn from_settings(s: Settings) -> Result<RunConfig, ConfigError> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            precision_bits: s.precision_bits.unwrap_or(d.precision_bits),
            depth: s.depth,
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            samples: s.samples.unwrap_or(d.samples),
            steps: s.steps.unwrap_or(d.steps),
            seed: s.seed.unwrap_or(d.seed),
            eta: s.eta,
            tau: s.tau.unwrap_or(d.tau),
            format: s.format.unwrap_or(d.format),
            out: s.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, message: String| Err(ConfigError::Invalid { key, message });
        if self.precision_bits < MIN_PRECISION {
            return bad("precision_bits", format!("must be at least {MIN_PRECISION}"));
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be positive".into());
        }
        if self.steps == 0 {
            return bad("steps", "must be positive".into());
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return bad("tau", format!("must be finite and nonnegative, got {}", self.tau));
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta >= 0.0) {
                return bad("eta", format!("must be finite and nonnegative, got {eta}"));
            }
        }
        Ok(())
    }
}
