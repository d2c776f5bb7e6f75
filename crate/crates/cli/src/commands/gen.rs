use std::path::PathBuf;
use std::time::Instant;

use navmap_core::osm::write_osm;
use navmap_core::pipeline::{scene_hash, Dataset};
use navmap_core::scenario::write_scenes_to;
use serde::Serialize;

use crate::commands::{config_json, data_dir, split_file, HD_GRAPH, NAV_GRAPH, WORLD_FILE};
use crate::error::{CliError, Result};
use crate::manifest::{write_atomic, RunManifest};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Number of scenes before the split.
    #[arg(long)]
    pub n: Option<usize>,
    /// Output directory.
    #[arg(long, env = "NAVMAP_DATA_DIR")]
    pub out: Option<PathBuf>,
    /// Percentage of scenes held out for validation.
    #[arg(long)]
    pub val_percent: Option<u64>,
    /// City frame of the written graphs.
    #[arg(long)]
    pub frame: Option<String>,
    /// Also write the navigation view as OSM XML.
    #[arg(long)]
    pub osm: bool,
    /// Number of directed carriageways.
    #[arg(long)]
    pub roads: Option<usize>,
    /// Number of intersections.
    #[arg(long)]
    pub intersections: Option<usize>,
    /// Fewest lanes per road.
    #[arg(long)]
    pub lanes_min: Option<usize>,
    /// Most lanes per road.
    #[arg(long)]
    pub lanes_max: Option<usize>,
    /// Lane width in meters.
    #[arg(long)]
    pub lane_width: Option<f64>,
    /// Largest road curvature in 1/m.
    #[arg(long)]
    pub curvature_max: Option<f64>,
    /// Grid spacing between intersections in meters.
    #[arg(long)]
    pub block_length: Option<f64>,
    /// Slowest agent speed in m/s.
    #[arg(long)]
    pub speed_min: Option<f64>,
    /// Fastest agent speed in m/s.
    #[arg(long)]
    pub speed_max: Option<f64>,
    /// Position noise in meters.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Chance that an agent changes lane.
    #[arg(long)]
    pub lane_change_prob: Option<f64>,
}

#[derive(Serialize)]
struct GenRecord<'a> {
    n: usize,
    scene_seed: u64,
    val_percent: u64,
    frame: &'a navmap_core::geo::CityFrame,
    world: &'a navmap_core::scenario::WorldSpec,
    scenes: &'a navmap_core::scenario::SceneSpec,
    train_scenes: usize,
    val_scenes: usize,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let start = Instant::now();
    let out = data_dir(args.out)?;
    let gen = &ctx.file.gen;
    let n = args.n.unwrap_or(gen.n);
    let val_percent = args.val_percent.unwrap_or(gen.val_percent);
    if val_percent > 100 {
        return Err(CliError::usage(format!("--val-percent {val_percent} exceeds 100")));
    }
    let frame = ctx.frames.get(args.frame.as_deref().unwrap_or(&gen.frame))?;

    let mut world = ctx.file.world.clone();
    world.seed = ctx.seed.unwrap_or(world.seed);
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(world.roads, args.roads);
    set!(world.intersections, args.intersections);
    set!(world.lanes_min, args.lanes_min);
    set!(world.lanes_max, args.lanes_max);
    set!(world.lane_width, args.lane_width);
    set!(world.curvature_max, args.curvature_max);
    set!(world.block_length, args.block_length);
    let mut scenes = ctx.file.scenes.clone();
    set!(scenes.speed_min, args.speed_min);
    set!(scenes.speed_max, args.speed_max);
    set!(scenes.noise_sigma, args.noise_sigma);
    set!(scenes.lane_change_prob, args.lane_change_prob);
    if !(scenes.speed_min > 0.0 && scenes.speed_min <= scenes.speed_max && scenes.speed_max.is_finite()) {
        return Err(CliError::usage(format!(
            "invalid spec: speed range [{}, {}]",
            scenes.speed_min, scenes.speed_max
        )));
    }
    if !(scenes.noise_sigma >= 0.0 && scenes.noise_sigma.is_finite()) {
        return Err(CliError::usage(format!(
            "invalid spec: noise sigma {}",
            scenes.noise_sigma
        )));
    }
    if !(0.0..=1.0).contains(&scenes.lane_change_prob) {
        return Err(CliError::usage(format!(
            "invalid spec: lane change probability {}",
            scenes.lane_change_prob
        )));
    }

    // Scene sampling uses its own stream so that the world and the scenes
    // never share random draws.
    let scene_seed = scene_hash(world.seed);
    let data = Dataset::generate(&world, &scenes, n, scene_seed, val_percent, &frame)?;

    let mut m = RunManifest::new("gen", world.seed, serde_json::Value::Null);
    let mut write = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = out.join(name);
        write_atomic(&p, bytes)?;
        m.output(&p);
        Ok(())
    };
    write(HD_GRAPH, data.hd.to_text().as_bytes())?;
    write(NAV_GRAPH, data.nav.to_text().as_bytes())?;
    for (split, set) in [("train", &data.train), ("val", &data.val)] {
        let mut buf = Vec::new();
        write_scenes_to(&mut buf, set).map_err(|e| CliError::io(&out, e))?;
        write(split_file(split)?, &buf)?;
    }
    if args.osm {
        write("nav.osm", write_osm(data.nav.graph()).as_bytes())?;
    }
    let record = GenRecord {
        n,
        scene_seed,
        val_percent,
        frame: &frame,
        world: &world,
        scenes: &scenes,
        train_scenes: data.train.len(),
        val_scenes: data.val.len(),
    };
    let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
    text.push('\n');
    write(WORLD_FILE, text.as_bytes())?;
    eprintln!(
        "{}: {} train / {} val scenes, hd {} edges, nav {} edges",
        out.display(),
        data.train.len(),
        data.val.len(),
        data.hd.edge_count(),
        data.nav.edge_count()
    );
    m.config = config_json(&record);
    m.duration_secs = start.elapsed().as_secs_f64();
    m.write(&out.join("manifest.json"))
}
