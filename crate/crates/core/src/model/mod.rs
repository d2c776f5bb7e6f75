//! Small map-aware multi-modal trajectory predictor.
//!
//! Agent history and map points are combined by single-query attention
//! into one fusion embedding `ξ`, which is decoded into `k` trajectories
//! with confidences. All gradients are analytic.

mod checkpoint;
mod gradcheck;
mod linear;
mod network;
mod params;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION,
};
pub use gradcheck::{gradient_check, GradCheck};
pub use linear::{axpy, dot, log_sum_exp, softmax, Linear};
pub use network::{
    agent_features, decode, embed_sample, encode_agent, encode_map, fuse, loss_and_gradient, model_loss, relu_margin,
    sample_loss, winner_mode, LossParts, LossWeights, MapKv, Sample,
};
pub use params::ModelParams;
pub use train::{evaluate_loss, train, EpochStats, OptimizerKind, Teacher, TrainConfig, TrainLog};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LocalPoint;
use crate::road_graph::{LocalNavGraph, DEFAULT_STEP};
use crate::scenario::{Scene, FUTURE_LEN, OBS_LEN};

/// Input width of the agent encoder: 19 frame deltas, flattened.
pub const AGENT_FEATURES: usize = 2 * (OBS_LEN - 1);
/// Output width of one trajectory head.
pub const HEAD_WIDTH: usize = 2 * FUTURE_LEN;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch in {block}: expected {expected}, got {got}")]
    Shape {
        block: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {block}")]
    NonFinite { block: &'static str },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapSource {
    Hd,
    Nav,
    None,
}

impl MapSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MapSource::Hd => "hd",
            MapSource::Nav => "nav",
            MapSource::None => "none",
        }
    }
}

impl std::str::FromStr for MapSource {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hd" => Ok(MapSource::Hd),
            "nav" => Ok(MapSource::Nav),
            "none" => Ok(MapSource::None),
            other => Err(ModelError::Config(format!(
                "unknown map source {other:?} (expected hd, nav or none)"
            ))),
        }
    }
}

impl std::fmt::Display for MapSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Fusion embedding width.
    pub d: usize,
    /// Number of predicted modes.
    pub k: usize,
    /// Hidden width of the agent encoder.
    pub h: usize,
    /// Radius in meters around the last observed position for map points.
    pub map_radius: f64,
    /// Polyline resampling step in meters.
    pub map_step: f64,
    pub map_source: MapSource,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 64,
            k: 6,
            h: 64,
            map_radius: 50.0,
            map_step: DEFAULT_STEP,
            map_source: MapSource::Nav,
        }
    }
}

impl ModelConfig {
    /// Embedding widths for the small and large presets.
    pub const PRESET_SMALL: (usize, usize) = (64, 96);
    pub const PRESET_LARGE: (usize, usize) = (128, 192);

    pub fn with_d(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_source(mut self, source: MapSource) -> Self {
        self.map_source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(ModelError::Config("d must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(ModelError::Config("k must be at least 1".into()));
        }
        if self.h == 0 {
            return Err(ModelError::Config("h must be at least 1".into()));
        }
        if !(self.map_radius.is_finite() && self.map_radius >= 0.0) {
            return Err(ModelError::Config(format!(
                "map_radius {} must be finite and >= 0",
                self.map_radius
            )));
        }
        if !(self.map_step.is_finite() && self.map_step > 0.0) {
            return Err(ModelError::Config(format!(
                "map_step {} must be finite and > 0",
                self.map_step
            )));
        }
        Ok(())
    }

    /// Map points the model consumes for a scene, or none for a map-free
    /// model regardless of the view passed in.
    pub fn map_points(&self, scene: &Scene, view: Option<&LocalNavGraph>) -> Vec<LocalPoint> {
        match (self.map_source, view) {
            (MapSource::None, _) | (_, None) => Vec::new(),
            (_, Some(g)) => g.points_in_radius(scene.last_observed(), self.map_radius, self.map_step),
        }
    }
}

/// `k` trajectories of [`FUTURE_LEN`] points with confidences on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub trajectories: Vec<Vec<LocalPoint>>,
    pub confidences: Vec<f64>,
}

impl PredictionSet {
    pub fn k(&self) -> usize {
        self.trajectories.len()
    }

    pub fn endpoint(&self, mode: usize) -> LocalPoint {
        *self.trajectories[mode].last().expect("non-empty trajectory")
    }

    pub fn translated(&self, by: LocalPoint) -> PredictionSet {
        PredictionSet {
            trajectories: self
                .trajectories
                .iter()
                .map(|t| t.iter().map(|&p| p + by).collect())
                .collect(),
            confidences: self.confidences.clone(),
        }
    }
}

/// A configured model with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(&config, seed);
        Ok(Self { config, params })
    }

    /// Fusion embedding for the scene's target.
    pub fn embed(&self, scene: &Scene, view: Option<&LocalNavGraph>) -> Result<Vec<f64>> {
        let points = self.config.map_points(scene, view);
        let sample = Sample::from_scene(scene, &points)?;
        network::embed_sample(&self.params, &sample)
    }

    pub fn predict(&self, scene: &Scene, view: Option<&LocalNavGraph>) -> Result<PredictionSet> {
        let points = self.config.map_points(scene, view);
        let h_a = encode_agent(scene.target_track(), &self.params)?;
        let kv = encode_map(&points, scene.last_observed(), &self.params);
        let xi = fuse(&h_a, &kv);
        Ok(decode(&xi, scene.last_observed(), &self.params))
    }

    /// Precomputed training sample for the scene.
    pub fn sample(&self, scene: &Scene, view: Option<&LocalNavGraph>) -> Result<Sample> {
        Sample::from_scene(scene, &self.config.map_points(scene, view))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_source_parses() {
        assert_eq!("HD".parse::<MapSource>().unwrap(), MapSource::Hd);
        assert_eq!("none".parse::<MapSource>().unwrap(), MapSource::None);
        assert!("lidar".parse::<MapSource>().is_err());
    }

    #[test]
    fn config_rejects_zero_widths() {
        assert!(ModelConfig::default().with_d(0).validate().is_err());
        let mut c = ModelConfig::default();
        c.k = 0;
        assert!(c.validate().is_err());
        assert!(ModelConfig::default().validate().is_ok());
    }
}
