pub mod eval;
pub mod gen;
pub mod ingest;
pub mod query;
pub mod report;
pub mod train;

use std::path::{Path, PathBuf};

use navmap_core::road_graph::LocalNavGraph;
use navmap_core::scenario::{read_scenes, Scene};

use crate::error::{CliError, Code, Result};

pub const HD_GRAPH: &str = "hd.graph";
pub const NAV_GRAPH: &str = "nav.graph";
pub const WORLD_FILE: &str = "world.json";

pub fn split_file(split: &str) -> Result<&'static str> {
    match split {
        "train" => Ok("train.jsonl"),
        "val" => Ok("val.jsonl"),
        other => Err(CliError::usage(format!(
            "unknown split '{other}' (expected train or val)"
        ))),
    }
}

pub fn read_graph(path: &Path) -> Result<LocalNavGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    LocalNavGraph::from_text(&text).map_err(|e| CliError::from(e).in_file(path))
}

pub fn read_split(dir: &Path, split: &str) -> Result<(PathBuf, Vec<Scene>)> {
    let path = dir.join(split_file(split)?);
    let scenes = read_scenes(&path)?;
    Ok((path, scenes))
}

pub fn data_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.ok_or_else(|| CliError::usage("no data directory: pass --data or set NAVMAP_DATA_DIR"))
}

pub fn config_json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

pub fn numeric(name: &str, v: f64, min_exclusive: f64) -> Result<f64> {
    if v.is_finite() && v > min_exclusive {
        Ok(v)
    } else {
        Err(CliError::new(
            Code::Usage,
            format!("{name} must be finite and > {min_exclusive}, got {v}"),
        ))
    }
}
