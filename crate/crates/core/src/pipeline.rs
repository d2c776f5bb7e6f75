//! Dataset assembly and the teacher / student / baseline benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distill::{self, DistillConfig, DistillError, Variant};
use crate::eval::{self, EvalError, MetricReport};
use crate::geo::CityFrame;
use crate::model::{self, MapSource, Model, ModelConfig, ModelError, Sample, TrainConfig, TrainLog};
use crate::road_graph::{GraphError, LocalNavGraph};
use crate::scenario::{generate_scenes, generate_world, MapPair, Scene, SceneSpec, WorldSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Distill(#[from] DistillError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Percentage of scenes held out for validation.
pub const DEFAULT_VAL_PERCENT: u64 = 20;

/// Stable hash of a scene id (SplitMix64 finalizer).
pub fn scene_hash(id: u64) -> u64 {
    let mut z = id.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Whether a scene belongs to the validation split.
pub fn is_validation(id: u64, val_percent: u64) -> bool {
    scene_hash(id) % 100 < val_percent
}

/// Splits scenes into (train, val) by id hash.
pub fn split(scenes: Vec<Scene>, val_percent: u64) -> (Vec<Scene>, Vec<Scene>) {
    scenes
        .into_iter()
        .partition(|s| !is_validation(s.scene_id, val_percent))
}

/// A synthetic world with both map views and split scenes.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub world: MapPair,
    pub hd: LocalNavGraph,
    pub nav: LocalNavGraph,
    pub train: Vec<Scene>,
    pub val: Vec<Scene>,
}

impl Dataset {
    pub fn generate(
        world: &WorldSpec,
        scenes: &SceneSpec,
        n: usize,
        seed: u64,
        val_percent: u64,
        frame: &CityFrame,
    ) -> Result<Self> {
        world.validate().map_err(PipelineError::Spec)?;
        let map = generate_world(world);
        let all = if n == 0 {
            Vec::new()
        } else {
            generate_scenes(&map, n, seed, scenes)
                .into_iter()
                .map(|g| g.scene)
                .collect()
        };
        let (train, val) = split(all, val_percent);
        Ok(Self {
            hd: map.hd_graph(frame)?,
            nav: map.nav_graph(frame)?,
            world: map,
            train,
            val,
        })
    }

    pub fn view(&self, source: MapSource) -> Option<&LocalNavGraph> {
        match source {
            MapSource::Hd => Some(&self.hd),
            MapSource::Nav => Some(&self.nav),
            MapSource::None => None,
        }
    }
}

/// Training samples for `scenes` under the config's map source.
pub fn build_samples(scenes: &[Scene], cfg: &ModelConfig, view: Option<&LocalNavGraph>) -> Result<Vec<Sample>> {
    Ok(scenes
        .par_iter()
        .map(|s| Sample::from_scene(s, &cfg.map_points(s, view)))
        .collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub world: WorldSpec,
    pub scenes: SceneSpec,
    pub n_scenes: usize,
    pub data_seed: u64,
    pub val_percent: u64,
    /// Training seeds; every model is trained once per seed.
    pub seeds: Vec<u64>,
    /// Teacher width; the map-free and plain nav models use it as well.
    pub d_t: usize,
    pub variant: Variant,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub alpha: f64,
    pub beta: f64,
    pub cache_teacher: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            world: WorldSpec::default(),
            scenes: SceneSpec::default(),
            n_scenes: 6250,
            data_seed: 2024,
            val_percent: DEFAULT_VAL_PERCENT,
            seeds: vec![0, 1, 2],
            d_t: 64,
            variant: Variant::Shared,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            alpha: 1.0,
            beta: 1.0,
            cache_teacher: true,
        }
    }
}

/// Benchmark entries in ordering-claim order.
pub const BENCH_MODELS: [&str; 4] = ["hd_teacher", "nav_distilled", "nav", "none"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRuns {
    pub name: String,
    /// minFDE@6 on the validation split, one per seed.
    pub min_fde6: Vec<f64>,
    pub reports: Vec<MetricReport>,
    pub final_train_loss: Vec<f64>,
}

impl ModelRuns {
    pub fn mean(&self) -> f64 {
        self.min_fde6.iter().sum::<f64>() / self.min_fde6.len() as f64
    }

    /// Sample standard deviation across seeds.
    pub fn std(&self) -> f64 {
        let n = self.min_fde6.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.min_fde6.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub train_scenes: usize,
    pub val_scenes: usize,
    pub models: Vec<ModelRuns>,
}

impl BenchmarkResult {
    pub fn get(&self, name: &str) -> Option<&ModelRuns> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Pooled standard deviation of two entries.
    pub fn pooled_std(&self, a: &str, b: &str) -> f64 {
        let (a, b) = (self.get(a).expect("model"), self.get(b).expect("model"));
        ((a.std().powi(2) + b.std().powi(2)) / 2.0).sqrt()
    }
}

fn fit(samples: &[Sample], cfg: &ModelConfig, train: &TrainConfig) -> Result<(Model, TrainLog)> {
    let mut m = Model::new(cfg.clone(), train.seed)?;
    let log = model::train(&mut m.params, samples, None, model::LossWeights::default(), train)?;
    Ok((m, log))
}

fn report(m: &Model, data: &Dataset) -> Result<MetricReport> {
    Ok(eval::evaluate(m, &data.val, data.view(m.config.map_source), &eval::DEFAULT_KS)?.0)
}

/// Trains the HD teacher, the distilled nav student, the plain nav model
/// and the map-free model for every seed and evaluates each on the
/// validation split. `progress` receives one line per finished run.
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    frame: &CityFrame,
    mut progress: impl FnMut(&str),
) -> Result<(Dataset, BenchmarkResult)> {
    let data = Dataset::generate(
        &cfg.world,
        &cfg.scenes,
        cfg.n_scenes,
        cfg.data_seed,
        cfg.val_percent,
        frame,
    )?;
    let base = cfg.model.clone().with_d(cfg.d_t);
    let hd_cfg = base.clone().with_source(MapSource::Hd);
    let nav_cfg = base.clone().with_source(MapSource::Nav);
    let none_cfg = base.clone().with_source(MapSource::None);
    let hd_samples = build_samples(&data.train, &hd_cfg, Some(&data.hd))?;
    let nav_samples = build_samples(&data.train, &nav_cfg, Some(&data.nav))?;
    let none_samples = build_samples(&data.train, &none_cfg, None)?;
    let dcfg = DistillConfig {
        alpha: cfg.alpha,
        beta: cfg.beta,
        variant: cfg.variant,
        teacher: None,
        cache_teacher: cfg.cache_teacher,
    };
    let mut runs: Vec<ModelRuns> = BENCH_MODELS
        .iter()
        .map(|n| ModelRuns {
            name: n.to_string(),
            min_fde6: Vec::new(),
            reports: Vec::new(),
            final_train_loss: Vec::new(),
        })
        .collect();
    for &seed in &cfg.seeds {
        let train = TrainConfig {
            seed,
            ..cfg.train.clone()
        };
        let (teacher, tlog) = distill::train_teacher(&hd_samples, &hd_cfg, &train)?;
        let (student, slog) = distill::train_student(&nav_samples, &teacher, &hd_samples, &nav_cfg, &dcfg, &train)?;
        let (nav, nlog) = fit(&nav_samples, &nav_cfg, &train)?;
        let (none, olog) = fit(&none_samples, &none_cfg, &train)?;
        for (run, (m, log)) in runs
            .iter_mut()
            .zip([(teacher, tlog), (student, slog), (nav, nlog), (none, olog)])
        {
            let r = report(&m, &data)?;
            let fde6 = r.at(6).map(|k| k.min_fde).unwrap_or(f64::NAN);
            progress(&format!("seed {seed} {}: minFDE@6 {fde6:.4}", run.name));
            run.min_fde6.push(fde6);
            run.reports.push(r);
            run.final_train_loss.push(log.final_loss().unwrap_or(f64::NAN));
        }
    }
    let result = BenchmarkResult {
        train_scenes: data.train.len(),
        val_scenes: data.val.len(),
        models: runs,
    };
    Ok((data, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stable_and_near_eighty_twenty() {
        let val = (0..10_000u64).filter(|&i| is_validation(i, 20)).count();
        assert!((1800..2200).contains(&val), "{val}");
        assert_eq!(is_validation(17, 20), is_validation(17, 20));
        assert!((0..100u64).all(|i| !is_validation(i, 0)));
    }
}
