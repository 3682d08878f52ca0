//! Optional TOML settings file. Every key mirrors a command-line flag and
//! flags take precedence.
//!
//! ```toml
//! data = ["iris.csv"]
//! label = "species"
//! preset = "full"
//! seed = 7
//! global_timeout = 600.0   # seconds
//! n_bar = 10000
//! alpha = 0.05
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use staged_automl::orchestrator::HoldoutPolicy;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<Vec<PathBuf>>,
    pub label: Option<String>,
    pub format: Option<String>,
    pub preset: Option<String>,
    pub stages: Option<Vec<String>>,
    pub presets: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub global_timeout: Option<f64>,
    pub per_eval_timeout: Option<f64>,
    pub stage_timeout: Option<f64>,
    pub repeats: Option<usize>,
    pub n_bar: Option<usize>,
    pub m: Option<usize>,
    pub holdout_fraction: Option<f64>,
    pub max_evals: Option<usize>,
    pub holdout: Option<HoldoutPolicy>,
    pub splits: Option<usize>,
    pub train_fraction: Option<f64>,
    pub jobs: Option<usize>,
    pub baseline: Option<String>,
    pub variants: Option<Vec<String>>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub trim: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("failed to read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}
