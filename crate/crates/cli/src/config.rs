//! Project configuration: one JSON file holding every hyperparameter the
//! pipeline exposes, with documented defaults. Relative paths resolve
//! against the config file's directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use dtg_core::g2g::TrainConfig;
use dtg_core::gaen::FusionConfig;
use dtg_core::Real;

use crate::error::CliError;

fn default_delta() -> Real {
    0.3
}
fn default_lambda() -> Real {
    1.0
}
fn default_window() -> usize {
    8
}
fn default_stride() -> usize {
    1
}
fn default_learning_rate() -> Real {
    0.01
}
fn default_momentum() -> Real {
    0.9
}
fn default_grad_clip() -> Option<Real> {
    Some(10.0)
}
fn default_epochs() -> usize {
    1000
}
fn default_epsilon() -> Real {
    1e-4
}
fn default_max_iters() -> usize {
    100
}
fn default_ridge() -> Real {
    1e-8
}
fn default_dkm_timeout() -> u64 {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSettings {
    #[serde(default = "FusionSettings::default_noise_std")]
    pub noise_std: Real,
    #[serde(default = "FusionSettings::default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "FusionSettings::default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "FusionSettings::default_band_lo")]
    pub band_lo: Real,
    #[serde(default = "FusionSettings::default_band_hi")]
    pub band_hi: Real,
    #[serde(default = "FusionSettings::default_consecutive_checks")]
    pub consecutive_checks: usize,
    #[serde(default = "FusionSettings::default_check_interval")]
    pub check_interval: usize,
    #[serde(default)]
    pub check_warmup: usize,
    #[serde(default = "FusionSettings::default_learning_rate")]
    pub learning_rate: Real,
    #[serde(default = "FusionSettings::default_generator_lr")]
    pub generator_lr: Option<Real>,
    #[serde(default)]
    pub lr_decay_tau: Option<Real>,
    /// Per-request DKM timeout in seconds.
    #[serde(default = "default_dkm_timeout")]
    pub dkm_timeout_secs: u64,
}

impl FusionSettings {
    fn default_noise_std() -> Real {
        0.25
    }
    fn default_batch_size() -> usize {
        32
    }
    fn default_max_epochs() -> usize {
        2000
    }
    fn default_band_lo() -> Real {
        0.45
    }
    fn default_band_hi() -> Real {
        0.55
    }
    fn default_consecutive_checks() -> usize {
        5
    }
    fn default_check_interval() -> usize {
        25
    }
    fn default_learning_rate() -> Real {
        0.005
    }
    fn default_generator_lr() -> Option<Real> {
        Some(0.001)
    }

    pub fn to_fusion_config(&self, seed: u64) -> FusionConfig {
        FusionConfig {
            noise_std: self.noise_std,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            band_lo: self.band_lo,
            band_hi: self.band_hi,
            consecutive_checks: self.consecutive_checks,
            check_interval: self.check_interval,
            check_warmup: self.check_warmup,
            learning_rate: self.learning_rate,
            generator_lr: self.generator_lr,
            lr_decay_tau: self.lr_decay_tau,
            momentum: 0.0,
            seed,
        }
    }

    pub fn dkm_timeout(&self) -> Duration {
        Duration::from_secs(self.dkm_timeout_secs)
    }
}

impl Default for FusionSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSettings {
    #[serde(default = "PathSettings::default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "PathSettings::default_db_dir")]
    pub db_dir: PathBuf,
    #[serde(default = "PathSettings::default_output_dir")]
    pub output_dir: PathBuf,
}

impl PathSettings {
    fn default_data_dir() -> PathBuf {
        PathBuf::from(".")
    }
    fn default_db_dir() -> PathBuf {
        PathBuf::from("db")
    }
    fn default_output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl Default for PathSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    /// Correlation/decode threshold, in (0, 1).
    #[serde(default = "default_delta")]
    pub delta: Real,
    /// Topology-vs-feature loss mix.
    #[serde(default = "default_lambda")]
    pub lambda: Real,
    /// Temporal window length T.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Stride when slicing training windows.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Encoder hidden widths; None means one hidden layer of width T.
    #[serde(default)]
    pub hidden_dims: Option<Vec<usize>>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: Real,
    #[serde(default = "default_momentum")]
    pub momentum: Real,
    #[serde(default = "default_grad_clip")]
    pub grad_clip: Option<Real>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Propagation convergence tolerance.
    #[serde(default = "default_epsilon")]
    pub epsilon: Real,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Ridge strength for feature regressors.
    #[serde(default = "default_ridge")]
    pub ridge: Real,
    #[serde(default)]
    pub fusion: FusionSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: PathSettings,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ProjectConfig {
    /// Loads a config file and re-roots its relative paths next to it.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut config: ProjectConfig =
            serde_json::from_slice(&bytes).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.paths.data_dir = rebase(base, &config.paths.data_dir);
        config.paths.db_dir = rebase(base, &config.paths.db_dir);
        config.paths.output_dir = rebase(base, &config.paths.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..1.0).contains(&self.delta) || self.delta == 0.0 {
            return Err(CliError::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.lambda < 0.0 {
            return Err(CliError::Config("lambda must be non-negative".into()));
        }
        if self.window < 2 {
            return Err(CliError::Config("window must be at least 2".into()));
        }
        if self.stride == 0 {
            return Err(CliError::Config("stride must be positive".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(CliError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Hidden dims with the documented default (one hidden layer of T).
    pub fn resolved_hidden_dims(&self) -> Vec<usize> {
        self.hidden_dims
            .clone()
            .unwrap_or_else(|| vec![self.window])
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            epochs: self.epochs,
            delta: self.delta,
            hidden_dims: self.resolved_hidden_dims(),
            grad_clip: self.grad_clip,
            seed: self.seed,
        }
    }
}

fn rebase(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
