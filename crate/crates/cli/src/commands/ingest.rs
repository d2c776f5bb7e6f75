use std::path::PathBuf;
use std::time::Instant;

use navmap_core::osm::{build_nav_graph, parse_osm, RoadTypeWhitelist};
use navmap_core::road_graph::localize;

use crate::commands::config_json;
use crate::error::{CliError, Result};
use crate::manifest::{sibling, write_atomic, RunManifest};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// OpenStreetMap XML file.
    #[arg(long)]
    pub osm: PathBuf,
    /// City frame the graph is projected into.
    #[arg(long)]
    pub frame: String,
    /// Output graph file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let start = Instant::now();
    let frame = ctx.frames.get(&args.frame)?;
    let bytes = std::fs::read(&args.osm).map_err(|e| CliError::io(&args.osm, e))?;
    let doc = parse_osm(&bytes).map_err(|e| CliError::from(e).in_file(&args.osm))?;
    let (graph, report) = build_nav_graph(&doc, &RoadTypeWhitelist::default());
    let local = localize(&graph, &frame).map_err(|e| CliError::from(e).in_file(&args.osm))?;
    write_atomic(&args.out, local.to_text().as_bytes())?;
    eprintln!(
        "{}: {} nodes, {} edges ({} ways kept, {} filtered, {} skipped)",
        args.out.display(),
        local.node_count(),
        local.edge_count(),
        report.retained_ways,
        report.filtered_ways,
        report.skipped.len()
    );
    let mut m = RunManifest::new("ingest", ctx.seed.unwrap_or(0), config_json(&frame));
    m.input(&args.osm);
    m.output(&args.out);
    m.duration_secs = start.elapsed().as_secs_f64();
    m.write(&sibling(&args.out, "manifest.json"))
}
