use std::path::PathBuf;
use std::time::Instant;

use navmap_core::distill::{self, DistillConfig, Variant};
use navmap_core::model::{
    self, load_checkpoint, write_checkpoint, Checkpoint, LossWeights, MapSource, Model, ModelConfig, OptimizerKind,
    TrainConfig,
};
use navmap_core::pipeline::build_samples;
use navmap_core::road_graph::LocalNavGraph;
use serde::Serialize;

use crate::commands::{config_json, data_dir, read_graph, read_split, HD_GRAPH, NAV_GRAPH};
use crate::error::{CliError, Result};
use crate::manifest::{sibling, write_atomic, RunManifest};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset directory written by `gen`.
    #[arg(long, env = "NAVMAP_DATA_DIR")]
    pub data: Option<PathBuf>,
    /// Map view the model consumes: hd, nav or none.
    #[arg(long)]
    pub map: Option<MapSource>,
    /// Teacher checkpoint; enables distillation (requires --map nav).
    #[arg(long)]
    pub distill: Option<PathBuf>,
    /// Student width relative to the teacher: matched or shared.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Weight of the prediction loss when distilling.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the embedding loss; 0 ignores the teacher.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Compute teacher embeddings once up front.
    #[arg(long)]
    pub cache_teacher: bool,
    /// Embedding width (set by the variant when distilling).
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of predicted modes.
    #[arg(long)]
    pub k: Option<usize>,
    /// Hidden width of the agent encoder.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Radius of the map crop around the agent in meters.
    #[arg(long)]
    pub map_radius: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Learning rate factor applied after every epoch.
    #[arg(long)]
    pub lr_decay: Option<f64>,
    /// Gradient-norm clip; 0 disables it.
    #[arg(long)]
    pub clip: Option<f64>,
    /// Optimizer; adam unless set.
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Momentum for --optimizer sgd.
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Output checkpoint.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Resolved<'a> {
    model: &'a ModelConfig,
    train: &'a TrainConfig,
    distill: Option<&'a DistillConfig>,
}

fn resolve(ctx: &Context, a: &Args) -> Result<(ModelConfig, TrainConfig, Option<DistillConfig>)> {
    let mut mcfg = ctx.file.model.clone();
    if let Some(m) = a.map {
        mcfg.map_source = m;
    }
    if let Some(d) = a.d {
        mcfg.d = d;
    }
    if let Some(k) = a.k {
        mcfg.k = k;
    }
    if let Some(h) = a.hidden {
        mcfg.h = h;
    }
    if let Some(r) = a.map_radius {
        mcfg.map_radius = r;
    }
    mcfg.validate()?;

    let mut tcfg = ctx.file.train.clone();
    tcfg.seed = ctx.seed.unwrap_or(tcfg.seed);
    if let Some(v) = a.epochs {
        tcfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        tcfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        tcfg.learning_rate = v;
    }
    if let Some(v) = a.lr_decay {
        tcfg.lr_decay = v;
    }
    if let Some(v) = a.clip {
        tcfg.clip_norm = v;
    }
    match (a.optimizer, a.momentum) {
        (Some(OptimizerArg::Adam), Some(_)) => {
            return Err(CliError::usage("--momentum applies to --optimizer sgd only"));
        }
        (Some(OptimizerArg::Adam), None) => tcfg.optimizer = OptimizerKind::adam(),
        (Some(OptimizerArg::Sgd), m) => {
            tcfg.optimizer = OptimizerKind::Sgd {
                momentum: m.unwrap_or(0.9),
            }
        }
        (None, Some(m)) => match &mut tcfg.optimizer {
            OptimizerKind::Sgd { momentum } => *momentum = m,
            OptimizerKind::Adam { .. } => {
                return Err(CliError::usage("--momentum applies to --optimizer sgd only"));
            }
        },
        (None, None) => {}
    }
    tcfg.validate()?;

    let mut dcfg = ctx.file.distill.clone();
    if let Some(t) = &a.distill {
        dcfg.teacher = Some(t.clone());
    }
    if dcfg.teacher.is_none() {
        if a.variant.is_some() || a.alpha.is_some() || a.beta.is_some() || a.cache_teacher {
            return Err(CliError::usage(
                "--variant, --alpha, --beta and --cache-teacher require --distill",
            ));
        }
        return Ok((mcfg, tcfg, None));
    }
    if mcfg.map_source != MapSource::Nav {
        return Err(CliError::usage(format!(
            "--distill trains a nav student, but --map is {}",
            mcfg.map_source
        )));
    }
    if a.d.is_some() {
        return Err(CliError::usage(
            "--d conflicts with --distill; the variant sets the student width",
        ));
    }
    if let Some(v) = a.variant {
        dcfg.variant = v;
    }
    if let Some(v) = a.alpha {
        dcfg.alpha = v;
    }
    if let Some(v) = a.beta {
        dcfg.beta = v;
    }
    dcfg.cache_teacher |= a.cache_teacher;
    dcfg.validate()?;
    Ok((mcfg, tcfg, Some(dcfg)))
}

fn view_for<'a>(
    source: MapSource,
    hd: &'a Option<LocalNavGraph>,
    nav: &'a Option<LocalNavGraph>,
) -> Option<&'a LocalNavGraph> {
    match source {
        MapSource::Hd => hd.as_ref(),
        MapSource::Nav => nav.as_ref(),
        MapSource::None => None,
    }
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let start = Instant::now();
    let dir = data_dir(args.data.clone())?;
    let (mcfg, tcfg, dcfg) = resolve(ctx, &args)?;
    let (train_path, scenes) = read_split(&dir, "train")?;
    if scenes.is_empty() {
        return Err(CliError::usage(format!("{}: no training scenes", train_path.display())));
    }

    let mut m = RunManifest::new("train", tcfg.seed, serde_json::Value::Null);
    m.input(&train_path);
    let needs_hd = mcfg.map_source == MapSource::Hd || dcfg.is_some();
    let needs_nav = mcfg.map_source == MapSource::Nav;
    let mut load = |name: &str, needed: bool| -> Result<Option<LocalNavGraph>> {
        if !needed {
            return Ok(None);
        }
        let p = dir.join(name);
        m.input(&p);
        read_graph(&p).map(Some)
    };
    let hd = load(HD_GRAPH, needs_hd)?;
    let nav = load(NAV_GRAPH, needs_nav)?;

    let samples = build_samples(&scenes, &mcfg, view_for(mcfg.map_source, &hd, &nav))?;
    let (trained, log, role, teacher_d) = match &dcfg {
        None => {
            let mut model = Model::new(mcfg.clone(), tcfg.seed)?;
            let log = model::train(&mut model.params, &samples, None, LossWeights::default(), &tcfg)?;
            let role = match mcfg.map_source {
                MapSource::Hd => "teacher",
                MapSource::Nav => "nav",
                MapSource::None => "map-free",
            };
            (model, log, role, None)
        }
        Some(d) => {
            let tpath = d.teacher.as_ref().expect("distillation has a teacher");
            m.input(tpath);
            let teacher = load_checkpoint(tpath)
                .map_err(|e| CliError::from(e).in_file(tpath))?
                .model;
            if teacher.config.map_source != MapSource::Hd {
                return Err(CliError::usage(format!(
                    "{}: teacher was trained on the {} view, expected hd",
                    tpath.display(),
                    teacher.config.map_source
                )));
            }
            let teacher_samples = build_samples(&scenes, &teacher.config, hd.as_ref())?;
            let (model, log) = distill::train_student(&samples, &teacher, &teacher_samples, &mcfg, d, &tcfg)?;
            (model, log, "student", Some(teacher.config.d))
        }
    };

    let mut ckpt = Checkpoint::new(trained)
        .with_meta("role", role)
        .with_meta("seed", tcfg.seed)
        .with_meta("epochs", tcfg.epochs as u64)
        .with_meta("train_scenes", scenes.len() as u64);
    if let Some(loss) = log.final_loss() {
        ckpt = ckpt.with_meta("final_loss", loss);
    }
    if let (Some(d), Some(d_t)) = (&dcfg, teacher_d) {
        ckpt = ckpt
            .with_meta("d_t", d_t as u64)
            .with_meta("variant", d.variant.as_str())
            .with_meta("alpha", d.alpha)
            .with_meta("beta", d.beta)
            .with_meta(
                "teacher",
                d.teacher.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            );
    }
    write_atomic(&args.out, write_checkpoint(&ckpt).as_bytes())?;
    m.output(&args.out);
    let curve = sibling(&args.out, "loss.csv");
    write_atomic(&curve, log.to_csv().as_bytes())?;
    m.output(&curve);
    eprintln!(
        "{}: {} model, d={}, final loss {:.4}",
        args.out.display(),
        role,
        ckpt.model.config.d,
        log.final_loss().unwrap_or(f64::NAN)
    );
    m.config = config_json(&Resolved {
        model: &ckpt.model.config,
        train: &tcfg,
        distill: dcfg.as_ref(),
    });
    m.duration_secs = start.elapsed().as_secs_f64();
    m.write(&sibling(&args.out, "manifest.json"))
}
