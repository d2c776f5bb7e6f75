use std::path::Path;

use navmap_core::distill::DistillConfig;
use navmap_core::model::{ModelConfig, TrainConfig};
use navmap_core::pipeline::DEFAULT_VAL_PERCENT;
use navmap_core::scenario::{SceneSpec, WorldSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Code, Result};

/// Contents of a `--config` TOML file. Every table is optional; command
/// line flags override what is set here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub frames: Option<std::path::PathBuf>,
    pub world: WorldSpec,
    pub scenes: SceneSpec,
    pub gen: GenSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub distill: DistillConfig,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSection {
    pub n: usize,
    pub val_percent: u64,
    pub frame: String,
}

impl Default for GenSection {
    fn default() -> Self {
        Self {
            n: 1000,
            val_percent: DEFAULT_VAL_PERCENT,
            frame: "pittsburgh".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub split: String,
    pub bin_width: f64,
    /// `silverman`, `none`, or a fixed bandwidth in meters.
    pub bandwidth: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            split: "val".into(),
            bin_width: 0.5,
            bandwidth: "silverman".into(),
        }
    }
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::new(Code::Config, format!("{}: {}", path.display(), e.message())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: FileConfig = toml::from_str("seed = 5\n[train]\nepochs = 3\n[model]\nk = 2\n").unwrap();
        assert_eq!(cfg.seed, Some(5));
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(cfg.model.k, 2);
        assert_eq!(cfg.gen, GenSection::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("sede = 5\n").is_err());
        assert!(toml::from_str::<FileConfig>("[train]\nepoch = 5\n").is_err());
    }
}
