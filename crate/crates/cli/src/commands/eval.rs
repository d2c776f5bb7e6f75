use std::path::PathBuf;
use std::time::Instant;

use navmap_core::eval::{self, fde_histogram, format_table, scene_csv, Bandwidth};
use navmap_core::model::{load_checkpoint, MapSource};
use serde::Serialize;

use crate::commands::{data_dir, numeric, read_graph, read_split, HD_GRAPH, NAV_GRAPH};
use crate::error::{CliError, Result};
use crate::manifest::{write_atomic, RunManifest};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Dataset directory written by `gen`.
    #[arg(long, env = "NAVMAP_DATA_DIR")]
    pub data: Option<PathBuf>,
    /// train or val.
    #[arg(long)]
    pub split: Option<String>,
    /// Directory for metrics.json, scenes.csv and the histogram files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Histogram bin width in meters.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// KDE bandwidth: silverman, none, or meters.
    #[arg(long)]
    pub bandwidth: Option<String>,
}

fn parse_bandwidth(s: &str) -> Result<Option<Bandwidth>> {
    match s {
        "silverman" => Ok(Some(Bandwidth::Silverman)),
        "none" => Ok(None),
        v => {
            let h: f64 = v
                .parse()
                .map_err(|_| CliError::usage(format!("bandwidth '{v}' is not silverman, none or a number")))?;
            Ok(Some(Bandwidth::Fixed(numeric("bandwidth", h, 0.0)?)))
        }
    }
}

#[derive(Serialize)]
struct Settings<'a> {
    split: &'a str,
    ks: &'a [usize],
    bin_width: f64,
    bandwidth: &'a str,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let start = Instant::now();
    let dir = data_dir(args.data)?;
    let defaults = &ctx.file.eval;
    let split = args.split.as_deref().unwrap_or(&defaults.split);
    let bin_width = numeric("bin width", args.bin_width.unwrap_or(defaults.bin_width), 0.0)?;
    let bandwidth_arg = args.bandwidth.as_deref().unwrap_or(&defaults.bandwidth);
    let bandwidth = parse_bandwidth(bandwidth_arg)?;

    let model = load_checkpoint(&args.ckpt)
        .map_err(|e| CliError::from(e).in_file(&args.ckpt))?
        .model;
    let (split_path, scenes) = read_split(&dir, split)?;
    let mut m = RunManifest::new("eval", ctx.seed.unwrap_or(0), serde_json::Value::Null);
    m.input(&args.ckpt);
    m.input(&split_path);
    let view = match model.config.map_source {
        MapSource::Hd => Some(dir.join(HD_GRAPH)),
        MapSource::Nav => Some(dir.join(NAV_GRAPH)),
        MapSource::None => None,
    };
    let graph = match &view {
        Some(p) => {
            m.input(p);
            Some(read_graph(p)?)
        }
        None => None,
    };
    let mut ks = vec![1, model.config.k.min(6)];
    ks.dedup();
    let (report, per_scene) = eval::evaluate(&model, &scenes, graph.as_ref(), &ks)?;
    let name = args
        .ckpt
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    print!("{}", format_table(&[(name, &report)]));

    let Some(out) = args.out else {
        return Ok(());
    };
    let last = ks.len() - 1;
    let fdes: Vec<f64> = per_scene.iter().map(|s| s.values[last].min_fde).collect();
    let hist = fde_histogram(&fdes, bin_width, bandwidth)?;
    let mut files = vec![
        ("metrics.json", report.to_json()),
        ("scenes.csv", scene_csv(&per_scene, &ks)),
        ("hist.csv", hist.to_csv()),
        ("hist.svg", hist.to_svg()),
    ];
    if let Some(k) = hist.kde_csv() {
        files.push(("kde.csv", k));
    }
    for (file, text) in files {
        let p = out.join(file);
        write_atomic(&p, text.as_bytes())?;
        m.output(&p);
    }
    m.config = serde_json::to_value(Settings {
        split,
        ks: &ks,
        bin_width,
        bandwidth: bandwidth_arg,
    })
    .expect("settings serialize");
    m.duration_secs = start.elapsed().as_secs_f64();
    m.write(&out.join("manifest.json"))
}
