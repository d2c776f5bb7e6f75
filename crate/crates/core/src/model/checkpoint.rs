//! JSON checkpoint layout:
//!
//! ```json
//! {
//!   "format": "navmap-checkpoint",
//!   "version": 1,
//!   "config": { "d": 64, "k": 6, "h": 64, "map_radius": 50.0, ... },
//!   "metadata": { ... },
//!   "tensors": [
//!     { "name": "agent_hidden.weight", "shape": [64, 38], "values": [ ... ] },
//!     ...
//!   ]
//! }
//! ```
//!
//! Weights are row-major `outputs × inputs`. Values are written as
//! shortest round-trip decimal strings of the 64-bit floats, so a
//! save/load cycle is lossless.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::{Model, ModelConfig, ModelError, Result, AGENT_FEATURES};

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "navmap-checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    /// Free-form provenance (role, teacher width, training settings).
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Checkpoint {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    format: String,
    version: u32,
    config: ModelConfig,
    #[serde(default)]
    metadata: BTreeMap<String, serde_json::Value>,
    tensors: Vec<Tensor>,
}

pub fn write_checkpoint(ckpt: &Checkpoint) -> String {
    let raw = Raw {
        format: FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: ckpt.model.config.clone(),
        metadata: ckpt.metadata.clone(),
        tensors: ckpt
            .model
            .params
            .tensors()
            .into_iter()
            .map(|(name, shape, values)| Tensor {
                name,
                shape,
                values: values.to_vec(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&raw).expect("checkpoint serializes");
    s.push('\n');
    s
}

pub fn read_checkpoint(text: &str) -> Result<Checkpoint> {
    let bad = |m: String| ModelError::Checkpoint(m);
    let raw: Raw = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if raw.format != FORMAT {
        return Err(bad(format!("format {:?}, expected {FORMAT:?}", raw.format)));
    }
    if raw.version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "unsupported version {}, expected {CHECKPOINT_VERSION}",
            raw.version
        )));
    }
    raw.config.validate()?;
    let mut params = ModelParams::zeros_with_input(&raw.config, AGENT_FEATURES);
    let expected = params.tensors();
    if expected.len() != raw.tensors.len() {
        return Err(bad(format!(
            "{} tensors, expected {}",
            raw.tensors.len(),
            expected.len()
        )));
    }
    for ((name, shape, _), t) in expected.iter().zip(&raw.tensors) {
        if *name != t.name || *shape != t.shape {
            return Err(bad(format!(
                "tensor {} {:?} does not match config (expected {name} {shape:?})",
                t.name, t.shape
            )));
        }
        if t.values.len() != shape.iter().product::<usize>() {
            return Err(bad(format!(
                "tensor {} has {} values for shape {:?}",
                t.name,
                t.values.len(),
                t.shape
            )));
        }
        if t.values.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("tensor {} has non-finite values", t.name)));
        }
    }
    let flat: Vec<f64> = raw.tensors.into_iter().flat_map(|t| t.values).collect();
    params.set_flat(&flat);
    Ok(Checkpoint {
        model: Model {
            config: raw.config,
            params,
        },
        metadata: raw.metadata,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, write_checkpoint(ckpt)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(&text).map_err(|e| match e {
        ModelError::Checkpoint(m) => ModelError::Checkpoint(format!("{}: {m}", path.display())),
        other => other,
    })
}
