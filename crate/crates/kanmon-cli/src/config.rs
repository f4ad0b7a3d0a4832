//! Optional TOML experiment configuration. Command-line flags always win
//! over file values; file values win over built-in defaults.

use kanmon::train::TrainOverrides;
use kanmon::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Keys a config file may set. Unknown keys are rejected so typos surface
/// as configuration errors instead of silently falling back to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub variant: Option<String>,
    pub sizes: Option<Vec<usize>>,
    pub seeds: Option<usize>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub rope: Option<f64>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub concentration: Option<f64>,
    pub pairs: Option<String>,
    pub faults: Option<Vec<u8>>,
    pub schema: Option<String>,
    /// `[train]` table: replacements for the per-variant training defaults.
    pub train: Option<TrainOverrides>,
}

impl FileConfig {
    /// Loads the file, or an empty config when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Training overrides, or none when the file has no `[train]` table.
    #[must_use]
    pub fn train_overrides(&self) -> TrainOverrides {
        self.train.unwrap_or_default()
    }
}

/// Flag value, then file value, then default.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value, then file value; error with `what` when neither is given.
pub fn require<T: Clone>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    flag.or(file)
        .ok_or_else(|| Error::config(format!("missing required {what} (flag or config file)")))
}
