use std::io::Write;
use std::path::PathBuf;

use navmap_core::geo::LocalPoint;
use navmap_core::road_graph::DEFAULT_STEP;

use crate::commands::{numeric, read_graph};
use crate::error::{CliError, Result};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Graph file written by `ingest` or `gen`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Expected frame of the graph; a mismatch is an error.
    #[arg(long)]
    pub frame: Option<String>,
    /// Query point east of the frame origin in meters.
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    /// Query point north of the frame origin in meters.
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    /// Search radius in meters.
    #[arg(long)]
    pub radius: f64,
    /// Resampling step in meters.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
}

/// Prints `edge_id,src,dst,index,x,y`, one row per resampled point.
pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    if let Some(name) = &args.frame {
        let wanted = ctx.frames.get(name)?;
        if wanted != *graph.frame() {
            return Err(CliError::usage(format!(
                "{} is in frame {}, not {}",
                args.graph.display(),
                graph.frame().name,
                wanted.name
            )));
        }
    }
    if !(args.x.is_finite() && args.y.is_finite()) {
        return Err(CliError::usage("query point must be finite"));
    }
    let radius = args.radius;
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(CliError::usage(format!("radius must be finite and >= 0, got {radius}")));
    }
    let step = numeric("step", args.step, 0.0)?;
    let segments = graph.segments_in_radius(LocalPoint::new(args.x, args.y), radius, step);
    let mut out = String::from("edge_id,src,dst,index,x,y\n");
    for s in &segments {
        for (i, p) in s.polyline.iter().enumerate() {
            out.push_str(&format!("{},{},{},{i},{:?},{:?}\n", s.edge_id, s.src, s.dst, p.x, p.y));
        }
    }
    std::io::stdout()
        .write_all(out.as_bytes())
        .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
}
