//! Experiment configuration: a TOML file with one optional table per
//! subcommand, overridden by command-line flags (flags win).

use std::path::PathBuf;

use serde::Deserialize;

use crate::CliError;

/// Top-level config file. Unknown keys are rejected so a typo cannot
/// silently fall back to a default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub mode_curve: Option<ModeCurveCfg>,
    pub density: Option<DensityCfg>,
    pub qc_scan: Option<QcScanCfg>,
    pub simulate: Option<SimulateCfg>,
    pub verify: Option<VerifyCfg>,
    pub validate_basis: Option<ValidateBasisCfg>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCurveCfg {
    /// "sin", "triangle", or "sampled:<path>"
    pub mode: Option<String>,
    pub epsilon: Option<f64>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityCfg {
    pub epsilon: Option<f64>,
    pub mu_max: Option<f64>,
    pub step: Option<f64>,
    /// 0 disables the Monte Carlo overlay
    pub mc_samples: Option<usize>,
    pub bin_width: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcScanCfg {
    pub n_list: Option<Vec<usize>>,
    pub epsilon_min: Option<f64>,
    pub epsilon_max: Option<f64>,
    pub epsilon_step: Option<f64>,
    pub sigma: Option<f64>,
    pub trials: Option<usize>,
    /// "gaussian", "uniform", or "two-point"
    pub dist: Option<String>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub sigma: Option<f64>,
    pub dist: Option<String>,
    pub mode: Option<String>,
    pub t_end: Option<f64>,
    pub points: Option<usize>,
    pub pair_tol: Option<f64>,
    /// where the trajectory CSV goes (the JSON report goes to `out`)
    pub trajectory_out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub sigma: Option<f64>,
    pub trials: Option<usize>,
    pub trend_n_list: Option<Vec<usize>>,
    pub trend_trials: Option<usize>,
    pub clt_size: Option<usize>,
    pub clt_samples: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBasisCfg {
    pub n: Option<usize>,
    pub tol: Option<f64>,
}

pub fn load(path: &std::path::Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Validate a common numeric precondition at config time so runtime core
/// errors can be treated uniformly as numerical failures.
pub fn require_positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {value}")))
    }
}

pub fn require_min_n(n: usize) -> Result<usize, CliError> {
    if n >= 2 {
        Ok(n)
    } else {
        Err(CliError::Config(format!("n must be at least 2, got {n}")))
    }
}
