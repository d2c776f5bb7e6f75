use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{embed_sample, loss_and_gradient, sample_loss, LossParts, LossWeights, Sample};
use super::params::ModelParams;
use super::{ModelError, Result};

/// Samples per gradient work unit. Units are summed in index order, so
/// results do not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Gradient descent with heavy-ball momentum (0 disables it).
    Sgd {
        momentum: f64,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplies the learning rate after every epoch.
    pub lr_decay: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    pub optimizer: OptimizerKind,
    /// Seeds parameter initialization and batch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 2e-3,
            lr_decay: 0.9,
            clip_norm: 10.0,
            optimizer: OptimizerKind::adam(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0) {
            return Err(ModelError::Config(format!("lr_decay {} must be > 0", self.lr_decay)));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm >= 0.0) {
            return Err(ModelError::Config(format!("clip_norm {} must be >= 0", self.clip_norm)));
        }
        Ok(())
    }
}

/// Source of frozen teacher embeddings for distillation, one per sample.
#[derive(Debug, Clone, Copy)]
pub enum Teacher<'a> {
    /// Embeddings computed once up front.
    Cached(&'a [Vec<f64>]),
    /// Teacher forward pass per sample and step.
    Live {
        params: &'a ModelParams,
        samples: &'a [Sample],
    },
}

impl Teacher<'_> {
    pub fn len(&self) -> usize {
        match self {
            Teacher::Cached(xs) => xs.len(),
            Teacher::Live { samples, .. } => samples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> Option<usize> {
        match self {
            Teacher::Cached(xs) => xs.first().map(Vec::len),
            Teacher::Live { params, .. } => Some(params.d()),
        }
    }

    pub fn embedding(&self, i: usize) -> Result<std::borrow::Cow<'_, [f64]>> {
        match self {
            Teacher::Cached(xs) => Ok(std::borrow::Cow::Borrowed(&xs[i][..])),
            Teacher::Live { params, samples } => Ok(std::borrow::Cow::Owned(embed_sample(params, &samples[i])?)),
        }
    }

    /// Embeddings for every sample, for use as [`Teacher::Cached`].
    pub fn precompute(params: &ModelParams, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
        samples.par_iter().map(|s| embed_sample(params, s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub loss: f64,
    pub regression: f64,
    pub classification: f64,
    pub distill: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    /// Loss curve as CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,learning_rate,loss,regression,classification,distill\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{:e},{:.9},{:.9},{:.9},{:.9}\n",
                e.epoch, e.learning_rate, e.loss, e.regression, e.classification, e.distill
            ));
        }
        s
    }
}

#[derive(Default, Clone, Copy)]
struct Sums {
    n: usize,
    total: f64,
    regression: f64,
    classification: f64,
    distill: f64,
}

impl Sums {
    fn add(&mut self, p: &LossParts) {
        self.n += 1;
        self.total += p.total;
        self.regression += p.regression;
        self.classification += p.classification;
        self.distill += p.distill;
    }

    fn merge(&mut self, o: &Sums) {
        self.n += o.n;
        self.total += o.total;
        self.regression += o.regression;
        self.classification += o.classification;
        self.distill += o.distill;
    }
}

fn batch_gradient(
    params: &ModelParams,
    samples: &[Sample],
    idx: &[usize],
    teacher: Option<&Teacher>,
    weights: LossWeights,
) -> Result<(ModelParams, Sums)> {
    let parts: Vec<Result<(ModelParams, Sums)>> = idx
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = params.clone();
            g.fill(0.0);
            let mut sums = Sums::default();
            for &i in chunk {
                let t = teacher.map(|t| t.embedding(i)).transpose()?;
                let p = loss_and_gradient(params, &samples[i], weights, t.as_deref(), &mut g)?;
                sums.add(&p);
            }
            Ok((g, sums))
        })
        .collect();
    let mut iter = parts.into_iter();
    let (mut grad, mut sums) = iter.next().expect("non-empty batch")?;
    for part in iter {
        let (g, s) = part?;
        grad.add_assign(&g);
        sums.merge(&s);
    }
    grad.scale(1.0 / idx.len() as f64);
    Ok((grad, sums))
}

struct Optimizer {
    kind: OptimizerKind,
    first: Vec<f64>,
    second: Vec<f64>,
    step: i32,
}

impl Optimizer {
    fn new(kind: OptimizerKind, n: usize) -> Self {
        Self {
            kind,
            first: vec![0.0; n],
            second: match kind {
                OptimizerKind::Adam { .. } => vec![0.0; n],
                OptimizerKind::Sgd { .. } => Vec::new(),
            },
            step: 0,
        }
    }

    fn update(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd { momentum } => {
                for ((t, v), g) in theta.iter_mut().zip(&mut self.first).zip(grad) {
                    *v = momentum * *v + g;
                    *t -= lr * *v;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                for (((t, m), v), g) in theta.iter_mut().zip(&mut self.first).zip(&mut self.second).zip(grad) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *t -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

/// Minibatch training of `params` in place. With a teacher, the loss is
/// `α·L_model + β·L_dist` against the teacher embedding of each sample.
pub fn train(
    params: &mut ModelParams,
    samples: &[Sample],
    teacher: Option<Teacher>,
    weights: LossWeights,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    if let Some(t) = &teacher {
        if t.len() != samples.len() {
            return Err(ModelError::Config(format!(
                "teacher covers {} samples, training set has {}",
                t.len(),
                samples.len()
            )));
        }
    }
    let mut log = TrainLog::default();
    if samples.is_empty() {
        return Ok(log);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut opt = Optimizer::new(cfg.optimizer, params.param_count());
    let mut lr = cfg.learning_rate;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sums = Sums::default();
        for batch in order.chunks(cfg.batch_size) {
            let (mut grad, s) = batch_gradient(params, samples, batch, teacher.as_ref(), weights)?;
            sums.merge(&s);
            let norm = grad.norm();
            if !norm.is_finite() {
                return Err(ModelError::NonFinite { block: "gradient" });
            }
            if cfg.clip_norm > 0.0 && norm > cfg.clip_norm {
                grad.scale(cfg.clip_norm / norm);
            }
            let mut theta = params.to_flat();
            opt.update(&mut theta, &grad.to_flat(), lr);
            params.set_flat(&theta);
            if let Some(name) = params.first_non_finite() {
                log::error!("epoch {epoch}: parameter {name} became non-finite");
                return Err(ModelError::NonFinite { block: "optimizer" });
            }
        }
        let n = sums.n as f64;
        let stats = EpochStats {
            epoch,
            learning_rate: lr,
            loss: sums.total / n,
            regression: sums.regression / n,
            classification: sums.classification / n,
            distill: sums.distill / n,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} (reg {:.4}, cls {:.4}, dist {:.4})",
            stats.loss,
            stats.regression,
            stats.classification,
            stats.distill
        );
        log.epochs.push(stats);
        lr *= cfg.lr_decay;
    }
    Ok(log)
}

/// Mean loss over a sample set without updating anything.
pub fn evaluate_loss(params: &ModelParams, samples: &[Sample], weights: LossWeights) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| sample_loss(params, s, weights, None).map(|p| p.total))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}
