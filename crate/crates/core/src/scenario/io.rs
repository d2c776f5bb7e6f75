//! Newline-delimited JSON scene files.
//!
//! One scene per line, keys in the fixed order `scene_id`, `agents`,
//! `target`, `future`; every coordinate carries six fractional digits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::scenes::Scene;
use crate::geo::LocalPoint;

#[derive(Debug, Error)]
pub enum SceneIoError {
    #[error("scene record {index}: {msg}")]
    Record { index: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn push_points(out: &mut String, pts: &[LocalPoint]) {
    out.push('[');
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "[{:.6},{:.6}]", p.x, p.y);
    }
    out.push(']');
}

pub fn scene_to_line(scene: &Scene) -> String {
    let mut out = String::with_capacity(64 + 24 * 20 * (scene.agents.len() + 2));
    let _ = write!(out, "{{\"scene_id\":{},\"agents\":[", scene.scene_id);
    for (i, track) in scene.agents.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_points(&mut out, track);
    }
    let _ = write!(out, "],\"target\":{},\"future\":", scene.target);
    push_points(&mut out, &scene.future);
    out.push('}');
    out
}

pub fn write_scenes_to(mut w: impl Write, scenes: &[Scene]) -> std::io::Result<()> {
    for s in scenes {
        writeln!(w, "{}", scene_to_line(s))?;
    }
    w.flush()
}

pub fn write_scenes(path: &Path, scenes: &[Scene]) -> Result<(), SceneIoError> {
    let io = |source| SceneIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_scenes_to(std::io::BufWriter::new(file), scenes).map_err(io)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    scene_id: u64,
    agents: Vec<Vec<[f64; 2]>>,
    target: usize,
    future: Vec<[f64; 2]>,
}

fn to_points(raw: Vec<[f64; 2]>) -> Vec<LocalPoint> {
    raw.into_iter().map(|[x, y]| LocalPoint::new(x, y)).collect()
}

pub fn parse_scene_line(line: &str, index: usize) -> Result<Scene, SceneIoError> {
    let raw: RawScene = serde_json::from_str(line).map_err(|e| SceneIoError::Record {
        index,
        msg: e.to_string(),
    })?;
    let scene = Scene {
        scene_id: raw.scene_id,
        agents: raw.agents.into_iter().map(to_points).collect(),
        target: raw.target,
        future: to_points(raw.future),
    };
    scene.validate().map_err(|msg| SceneIoError::Record { index, msg })?;
    Ok(scene)
}

pub fn read_scenes_from(r: impl BufRead) -> Result<Vec<Scene>, SceneIoError> {
    let mut out = Vec::new();
    for (index, line) in r.lines().enumerate() {
        let line = line.map_err(|e| SceneIoError::Record {
            index,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_scene_line(&line, index)?);
    }
    Ok(out)
}

pub fn read_scenes(path: &Path) -> Result<Vec<Scene>, SceneIoError> {
    let file = std::fs::File::open(path).map_err(|source| SceneIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_scenes_from(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{FUTURE_LEN, OBS_LEN};

    fn scene(id: u64) -> Scene {
        Scene {
            scene_id: id,
            agents: vec![(0..OBS_LEN).map(|i| LocalPoint::new(i as f64 * 0.5, -1.25)).collect()],
            target: 0,
            future: (0..FUTURE_LEN)
                .map(|i| LocalPoint::new(10.0 + i as f64, 0.125))
                .collect(),
        }
    }

    #[test]
    fn line_layout() {
        let line = scene_to_line(&scene(3));
        assert!(line.starts_with("{\"scene_id\":3,\"agents\":[[[0.000000,-1.250000],[0.500000,-1.250000]"));
        assert!(line.contains("],\"target\":0,\"future\":[[10.000000,0.125000]"));
        assert!(line.ends_with("[39.000000,0.125000]]}"));
    }

    #[test]
    fn empty_and_truncated() {
        let mut buf = Vec::new();
        write_scenes_to(&mut buf, &[]).unwrap();
        assert!(buf.is_empty());
        assert!(read_scenes_from(&buf[..]).unwrap().is_empty());

        write_scenes_to(&mut buf, &[scene(0), scene(1), scene(2)]).unwrap();
        let cut = &buf[..buf.len() - 40];
        match read_scenes_from(cut) {
            Err(SceneIoError::Record { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected record error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let mut s = scene(0);
        s.future.pop();
        let line = scene_to_line(&s);
        assert!(matches!(
            parse_scene_line(&line, 7),
            Err(SceneIoError::Record { index: 7, .. })
        ));
    }
}
