//! Experiment configuration (TOML) and seeded substreams.
//!
//! ```toml
//! mode = "poisson_check"        # poisson_check | scaling | trajectory | oracle_validation
//! seed = 1
//! replicates = 10000
//! workers = 8                   # optional; never affects outputs
//! output_dir = "out/poisson"    # optional; relative to the working directory
//!
//! [degrees]                     # not used by `scaling`, which has its own grid
//! kind = "regular"              # regular{n, d} | subpower{n, gamma, c, target_nu}
//! n = 10000                     # | file{path} | explicit{degrees}
//! d = 3
//!
//! [tolerances]                  # every threshold a verdict uses lives here
//! sigma = 3.0
//! ```
//!
//! `file` paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use pairlab_core::degree::{self, DegreeSequence, SubpowerParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::formats::{self, FormatError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("degree file {path}: {source}")]
    DegreeFile { path: PathBuf, source: FormatError },
    #[error("degree spec: {0}")]
    Degree(#[from] degree::DegreeError),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PoissonCheck,
    Scaling,
    Trajectory,
    OracleValidation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeSpec {
    Regular { n: usize, d: u32 },
    Subpower { n: usize, gamma: f64, c: f64, target_nu: f64 },
    File { path: PathBuf },
    Explicit { degrees: Vec<u32> },
}

impl DegreeSpec {
    /// Materializes the sequence; `base` resolves relative file paths.
    pub fn build(&self, base: &Path) -> Result<DegreeSequence, ConfigError> {
        match self {
            DegreeSpec::Regular { n, d } => Ok(DegreeSequence::regular(*n, *d)?),
            DegreeSpec::Subpower { n, gamma, c, target_nu } => {
                Ok(degree::build_subpower_sequence(*n, *gamma, *c, *target_nu)?)
            }
            DegreeSpec::File { path } => {
                let path = base.join(path);
                formats::read_degree_sequence(&path).map_err(|source| ConfigError::DegreeFile { path, source })
            }
            DegreeSpec::Explicit { degrees } => Ok(DegreeSequence::new(degrees.clone())?),
        }
    }

    pub fn subpower_params(&self) -> Option<SubpowerParams> {
        match self {
            DegreeSpec::Subpower { gamma, c, .. } => SubpowerParams::new(*gamma, *c).ok(),
            _ => None,
        }
    }
}

/// Thresholds used by verdicts. Absolute tolerances, when set, replace
/// the `sigma` multiple of the standard error for that statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub sigma: f64,
    pub enumeration_cap: u64,
    pub max_attempts: u64,
    /// Significance level of chi-squared tests.
    pub significance: f64,
    pub loops_abs: Option<f64>,
    pub parallel_abs: Option<f64>,
    pub simple_abs: Option<f64>,
    /// Median over replicates of the max trajectory deviation / n.
    pub trajectory_threshold: f64,
    /// Relative error allowed in the one-step martingale identity.
    pub martingale_rel: f64,
    /// Allowed max/min ratio of the 95th-percentile normalized `C_n` across n.
    pub scaling_factor: f64,
    pub max_degree_ratio: [f64; 2],
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sigma: 3.0,
            enumeration_cap: pairlab_core::pairing::DEFAULT_ENUMERATION_CAP,
            max_attempts: 1000,
            significance: 1e-3,
            loops_abs: None,
            parallel_abs: None,
            simple_abs: None,
            trajectory_threshold: 0.01,
            martingale_rel: 1e-12,
            scaling_factor: 3.0,
            max_degree_ratio: [0.5, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingGrid {
    pub gammas: Vec<f64>,
    pub ns: Vec<usize>,
    #[serde(default = "one")]
    pub c: f64,
    pub target_nu: f64,
    /// Condition on simplicity (rejection) before measuring `C_n`.
    #[serde(default = "yes")]
    pub simple_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryOptions {
    /// Degree classes `1..=max_j` whose trajectories are compared.
    pub max_j: u32,
    /// Early-step window of the drift estimate.
    pub window: u64,
    /// Root vertex; the lowest-indexed maximal-degree vertex when absent.
    pub root: Option<usize>,
    /// Number of replicates whose full traces go to `trajectory.csv`.
    pub export_traces: u64,
    /// States per replicate fed to the martingale identity check.
    pub martingale_states: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            max_j: 5,
            window: 10,
            root: None,
            export_traces: 5,
            martingale_states: 10,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub replicates: u64,
    /// Worker threads. Excluded from the config hash and echo.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Excluded from the config hash and echo.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub degrees: Option<DegreeSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub scaling: Option<ScalingGrid>,
    #[serde(default)]
    pub trajectory: TrajectoryOptions,
    /// Directory that relative degree-file paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            source: Box::new(e),
        })?;
        cfg.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        let t = &self.tolerances;
        if !(t.sigma > 0.0) {
            return Err(invalid("tolerances.sigma", "must be positive"));
        }
        if t.max_attempts == 0 {
            return Err(invalid("tolerances.max_attempts", "must be at least 1"));
        }
        if !(t.significance > 0.0 && t.significance < 1.0) {
            return Err(invalid("tolerances.significance", "must lie in (0, 1)"));
        }
        if !(t.max_degree_ratio[0] <= t.max_degree_ratio[1]) {
            return Err(invalid("tolerances.max_degree_ratio", "lower bound exceeds upper bound"));
        }
        match self.mode {
            Mode::Scaling => {
                let grid = self
                    .scaling
                    .as_ref()
                    .ok_or_else(|| invalid("scaling", "required in scaling mode"))?;
                if grid.gammas.is_empty() || grid.ns.is_empty() {
                    return Err(invalid("scaling", "gammas and ns must be nonempty"));
                }
                if !(grid.target_nu > 0.0 && grid.target_nu < 1.0) {
                    return Err(invalid("scaling.target_nu", "must lie in (0, 1) for a subcritical grid"));
                }
            }
            _ => {
                if self.degrees.is_none() {
                    return Err(invalid("degrees", "required in this mode"));
                }
            }
        }
        if self.mode == Mode::Trajectory && self.trajectory.max_j == 0 {
            return Err(invalid("trajectory.max_j", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical JSON echo (no worker count, no output directory).
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// First 16 hex digits of SHA-256 over the canonical echo.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().to_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }
}

/// Generator for replicate `replicate` of grid cell `cell`.
///
/// ChaCha8 keyed by `seed`, stream `cell << 32 | replicate`: every
/// (cell, replicate) gets its own stream, independent of scheduling.
pub fn substream(seed: u64, cell: u32, replicate: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(cell) << 32) | u64::from(replicate));
    rng
}
