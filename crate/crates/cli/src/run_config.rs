//! TOML run configuration: data locations, pipeline constants and the seed.

use std::path::{Path, PathBuf};

use rnv_core::Config;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "RNV_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub feature_dir: Option<PathBuf>,
    /// Defaults to `feature_dir`.
    pub audio_dir: Option<PathBuf>,
    pub segmenter: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the clustering; overrides `pipeline.segmenter.seed`.
    pub seed: u64,
    pub paths: Paths,
    pub pipeline: Config,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pipeline = Config::default();
        Self { seed: pipeline.segmenter.seed, paths: Paths::default(), pipeline }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.pipeline.segmenter.seed = cfg.seed;
        cfg.pipeline.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::data(path, e))
    }

    /// Loads the file named by `flag`, else by the environment, else defaults.
    pub fn resolve(flag: Option<&Path>) -> Result<Self, CliError> {
        match flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
            Some(path) => Self::load(&path),
            None => Ok(Self::default()),
        }
    }
}
