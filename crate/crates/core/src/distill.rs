//! Teacher-student distillation of the fusion embedding.
//!
//! A teacher trained on the HD view is frozen; a student on the nav view
//! is trained with `α·L_model + β·L_dist`, where `L_dist` pulls the first
//! `d_t` coordinates of the student embedding towards the teacher's.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    self, LossWeights, MapSource, Model, ModelConfig, ModelError, Sample, Teacher, TrainConfig, TrainLog,
};

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("student width {d} is smaller than teacher width {d_t}")]
    Width { d_t: usize, d: usize },
    #[error("invalid distillation config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = DistillError> = std::result::Result<T, E>;

/// Teacher and student embedding widths; the first `d_t` student
/// coordinates are guided, the rest are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub d_t: usize,
    pub d: usize,
}

impl EmbeddingSpec {
    pub fn new(d_t: usize, d: usize) -> Result<Self> {
        if d_t == 0 {
            return Err(DistillError::Config("teacher width must be at least 1".into()));
        }
        if d < d_t {
            return Err(DistillError::Width { d_t, d });
        }
        Ok(Self { d_t, d })
    }

    pub fn guided(&self) -> usize {
        self.d_t
    }

    pub fn unguided(&self) -> usize {
        self.d - self.d_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Student as wide as the teacher.
    Matched,
    /// Student 1.5 times as wide; a third of it is unguided.
    Shared,
}

impl Variant {
    pub fn student_width(self, d_t: usize) -> usize {
        match self {
            Variant::Matched => d_t,
            Variant::Shared => (1.5 * d_t as f64).round() as usize,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Matched => "matched",
            Variant::Shared => "shared",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = DistillError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matched" => Ok(Variant::Matched),
            "shared" => Ok(Variant::Shared),
            other => Err(DistillError::Config(format!(
                "unknown variant {other:?} (expected matched or shared)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub alpha: f64,
    pub beta: f64,
    pub variant: Variant,
    pub teacher: Option<PathBuf>,
    /// Compute teacher embeddings once instead of per step. Results are
    /// identical either way.
    pub cache_teacher: bool,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            variant: Variant::Shared,
            teacher: None,
            cache_teacher: false,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DistillError::Config(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    /// Embedding spec for a teacher of width `d_t`.
    pub fn spec(&self, d_t: usize) -> Result<EmbeddingSpec> {
        EmbeddingSpec::new(d_t, self.variant.student_width(d_t))
    }
}

/// `L_dist = (1/d_t) Σ_{i<d_t} (ξ'_i − ξ_i)²` for teacher `ξ'` of width
/// `d_t` and student `ξ` of width `d ≥ d_t`.
pub fn distill_loss(teacher: &[f64], student: &[f64]) -> Result<f64> {
    let d_t = teacher.len();
    EmbeddingSpec::new(d_t, student.len())?;
    let sum: f64 = teacher.iter().zip(student).map(|(t, s)| (t - s) * (t - s)).sum();
    Ok(sum / d_t as f64)
}

/// Gradient of [`distill_loss`] with respect to the student embedding.
pub fn distill_gradient(teacher: &[f64], student: &[f64]) -> Result<Vec<f64>> {
    let d_t = teacher.len();
    EmbeddingSpec::new(d_t, student.len())?;
    let mut g = vec![0.0; student.len()];
    for ((gi, t), s) in g.iter_mut().zip(teacher).zip(student) {
        *gi = 2.0 * (s - t) / d_t as f64;
    }
    Ok(g)
}

/// `α·L_model + β·L_dist`.
pub fn total_loss(l_model: f64, l_dist: f64, cfg: &DistillConfig) -> f64 {
    total_loss_weighted(l_model, l_dist, cfg.alpha, cfg.beta)
}

pub fn total_loss_weighted(l_model: f64, l_dist: f64, alpha: f64, beta: f64) -> f64 {
    alpha * l_model + beta * l_dist
}

/// Trains an HD-view teacher from scratch for the configured epoch budget.
pub fn train_teacher(samples: &[Sample], config: &ModelConfig, train: &TrainConfig) -> Result<(Model, TrainLog)> {
    if config.map_source != MapSource::Hd {
        return Err(DistillError::Config(format!(
            "teacher must use the hd map source, got {}",
            config.map_source
        )));
    }
    let mut model = Model::new(config.clone(), train.seed)?;
    let log = model::train(&mut model.params, samples, None, LossWeights::default(), train)?;
    Ok((model, log))
}

/// Trains a nav-view student guided by a frozen teacher.
///
/// `student_samples[i]` and `teacher_samples[i]` must describe the same
/// scene under the nav and HD views. The student width follows the
/// variant; any `d` in `config` is overridden.
pub fn train_student(
    student_samples: &[Sample],
    teacher: &Model,
    teacher_samples: &[Sample],
    config: &ModelConfig,
    cfg: &DistillConfig,
    train: &TrainConfig,
) -> Result<(Model, TrainLog)> {
    cfg.validate()?;
    if config.map_source != MapSource::Nav {
        return Err(DistillError::Config(format!(
            "student must use the nav map source, got {}",
            config.map_source
        )));
    }
    if teacher.config.map_source != MapSource::Hd {
        return Err(DistillError::Config(
            "teacher checkpoint was not trained on the hd view".into(),
        ));
    }
    if student_samples.len() != teacher_samples.len() {
        return Err(DistillError::Config(format!(
            "{} student samples but {} teacher samples",
            student_samples.len(),
            teacher_samples.len()
        )));
    }
    let spec = cfg.spec(teacher.config.d)?;
    let student_cfg = config.clone().with_d(spec.d);
    let mut model = Model::new(student_cfg, train.seed)?;
    let weights = cfg.weights();
    let cached;
    let source = if cfg.beta == 0.0 {
        None
    } else if cfg.cache_teacher {
        cached = Teacher::precompute(&teacher.params, teacher_samples)?;
        Some(Teacher::Cached(&cached))
    } else {
        Some(Teacher::Live {
            params: &teacher.params,
            samples: teacher_samples,
        })
    };
    let log = model::train(&mut model.params, student_samples, source, weights, train)?;
    Ok((model, log))
}
