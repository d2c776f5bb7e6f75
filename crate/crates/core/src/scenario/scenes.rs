use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::world::{LaneKind, Maneuver, MapPair};
use crate::geo::LocalPoint;

/// Observed steps per agent (2 s at 10 Hz).
pub const OBS_LEN: usize = 20;
/// Future steps of the target (3 s at 10 Hz).
pub const FUTURE_LEN: usize = 30;
/// Sampling interval in seconds.
pub const DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: u64,
    /// Observed tracks, each exactly [`OBS_LEN`] positions.
    pub agents: Vec<Vec<LocalPoint>>,
    pub target: usize,
    /// Target ground truth, exactly [`FUTURE_LEN`] positions.
    pub future: Vec<LocalPoint>,
}

impl Scene {
    pub fn target_track(&self) -> &[LocalPoint] {
        &self.agents[self.target]
    }

    pub fn last_observed(&self) -> LocalPoint {
        *self.target_track().last().expect("non-empty track")
    }

    pub fn translated(&self, by: LocalPoint) -> Scene {
        Scene {
            scene_id: self.scene_id,
            agents: self
                .agents
                .iter()
                .map(|t| t.iter().map(|&p| p + by).collect())
                .collect(),
            target: self.target,
            future: self.future.iter().map(|&p| p + by).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.agents.is_empty() {
            return Err("scene has no agents".into());
        }
        if self.target >= self.agents.len() {
            return Err(format!(
                "target {} out of range ({} agents)",
                self.target,
                self.agents.len()
            ));
        }
        if let Some((i, t)) = self.agents.iter().enumerate().find(|(_, t)| t.len() != OBS_LEN) {
            return Err(format!(
                "agent {i} has {} observed positions, expected {OBS_LEN}",
                t.len()
            ));
        }
        if self.future.len() != FUTURE_LEN {
            return Err(format!(
                "future has {} positions, expected {FUTURE_LEN}",
                self.future.len()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub speed_min: f64,
    pub speed_max: f64,
    pub noise_sigma: f64,
    pub lane_change_prob: f64,
    pub max_background: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            speed_min: 3.0,
            speed_max: 15.0,
            noise_sigma: 0.1,
            lane_change_prob: 0.2,
            max_background: 4,
        }
    }
}

/// What the target did during its 5 s window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ManeuverLabel {
    pub turned: bool,
    pub changed_lane: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub scene: Scene,
    pub label: ManeuverLabel,
    pub speed: f64,
}

/// A dense path an agent drives along, parameterized by arc length.
struct Path {
    points: Vec<LocalPoint>,
    cum: Vec<f64>,
}

impl Path {
    fn new() -> Self {
        Self {
            points: Vec::new(),
            cum: Vec::new(),
        }
    }

    fn push(&mut self, p: LocalPoint) {
        match self.points.last() {
            None => self.cum.push(0.0),
            Some(last) => {
                let d = last.distance(&p);
                if d == 0.0 {
                    return;
                }
                self.cum.push(self.cum.last().unwrap() + d);
            }
        }
        self.points.push(p);
    }

    fn length(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    fn at(&self, s: f64) -> LocalPoint {
        let i = self.cum.partition_point(|&c| c <= s);
        if i == 0 {
            return self.points[0];
        }
        if i >= self.points.len() {
            return *self.points.last().unwrap();
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let t = (s - self.cum[i - 1]) / (self.cum[i] - self.cum[i - 1]);
        LocalPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }
}

const PATH_STEP: f64 = 0.5;

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    0.5 - 0.5 * (std::f64::consts::PI * t).cos()
}

/// Drives a lane-following route starting at `u0` on `lane`. Returns the
/// path and label, or `None` if the route dead-ends before `needed` metres.
fn drive(
    world: &MapPair,
    lane: usize,
    u0: f64,
    needed: f64,
    lane_change: Option<(usize, f64, f64)>,
    rng: &mut impl Rng,
) -> Option<(Path, ManeuverLabel)> {
    let mut path = Path::new();
    let mut label = ManeuverLabel::default();
    let mut lane = lane;
    let mut u_start = u0;
    let mut change = lane_change;
    loop {
        let LaneKind::Road { road, offset, .. } = world.lanes[lane].kind else {
            unreachable!("routes continue on road lanes")
        };
        let geom = &world.roads[road].geometry;
        let len = geom.length();
        let mut final_lane = lane;
        let offset_at: Box<dyn Fn(f64) -> f64> = match change.take() {
            Some((to_lane, from_u, span)) => {
                let LaneKind::Road { offset: to_off, .. } = world.lanes[to_lane].kind else {
                    unreachable!()
                };
                final_lane = to_lane;
                if from_u < needed {
                    label.changed_lane = true;
                }
                let base = u_start + from_u;
                Box::new(move |u: f64| offset + (to_off - offset) * smoothstep((u - base) / span))
            }
            None => Box::new(move |_| offset),
        };
        let n = (((len - u_start) / PATH_STEP).ceil() as usize).max(1);
        for i in 0..=n {
            let u = u_start + (len - u_start) * i as f64 / n as f64;
            path.push(geom.offset_point(u, offset_at(u)));
        }
        if path.length() >= needed {
            return Some((path, label));
        }
        let succ = &world.lanes[final_lane].successors;
        if succ.is_empty() {
            return None;
        }
        let conn = succ[rng.gen_range(0..succ.len())];
        let LaneKind::Connector { maneuver, control, .. } = &world.lanes[conn].kind else {
            unreachable!("road lanes lead into connectors")
        };
        if *maneuver != Maneuver::Straight && path.length() < needed {
            label.turned = true;
        }
        let approx = control[0].distance(&control[3]) * 1.3;
        let m = ((approx / PATH_STEP).ceil() as usize).max(2);
        for p in super::world::sample_bezier(control, m) {
            path.push(p);
        }
        lane = world.lanes[conn].successors[0];
        u_start = 0.0;
    }
}

fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn quantize_point(p: LocalPoint) -> LocalPoint {
    LocalPoint::new(quantize(p.x), quantize(p.y))
}

fn road_lanes(world: &MapPair) -> Vec<usize> {
    world
        .lanes
        .iter()
        .filter(|l| matches!(l.kind, LaneKind::Road { .. }))
        .map(|l| l.id)
        .collect()
}

fn sample_agent(
    world: &MapPair,
    lanes: &[usize],
    steps: usize,
    speed: f64,
    allow_change: bool,
    rng: &mut impl Rng,
) -> (Path, ManeuverLabel) {
    let needed = speed * DT * (steps - 1) as f64;
    let mut allow_change = allow_change;
    let mut attempts = 0usize;
    loop {
        attempts += 1;
        if attempts > 1000 {
            allow_change = false;
        }
        let lane = lanes[rng.gen_range(0..lanes.len())];
        let LaneKind::Road { road, index, .. } = world.lanes[lane].kind else {
            unreachable!()
        };
        let len = world.roads[road].geometry.length();
        let u0 = rng.gen_range(0.0..len);
        let mut change = None;
        if allow_change {
            let siblings = &world.roads[road].lanes;
            let span = speed * rng.gen_range(2.0..3.5);
            let lead: f64 = rng.gen_range(0.0..needed.max(1.0) * 0.7);
            if siblings.len() > 1 && u0 + lead + span < len {
                let to = if index == 0 {
                    1
                } else if index + 1 == siblings.len() || rng.gen_bool(0.5) {
                    index - 1
                } else {
                    index + 1
                };
                change = Some((siblings[to], lead, span));
            } else {
                continue;
            }
        }
        if let Some(out) = drive(world, lane, u0, needed, change, rng) {
            return out;
        }
    }
}

/// Generates `n` scenes. Scene `i` draws its randomness from a stream keyed
/// by `(seed, i)`, so output does not depend on evaluation order.
pub fn generate_scenes(world: &MapPair, n: usize, seed: u64, spec: &SceneSpec) -> Vec<GeneratedScene> {
    let lanes = road_lanes(world);
    assert!(!lanes.is_empty(), "world has no lanes");
    (0..n as u64)
        .into_par_iter()
        .map(|id| generate_one(world, &lanes, id, seed, spec))
        .collect()
}

fn generate_one(world: &MapPair, lanes: &[usize], id: u64, seed: u64, spec: &SceneSpec) -> GeneratedScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("valid sigma");
    let jitter = |p: LocalPoint, rng: &mut ChaCha8Rng| {
        if spec.noise_sigma > 0.0 {
            LocalPoint::new(p.x + noise.sample(rng), p.y + noise.sample(rng))
        } else {
            p
        }
    };
    let speed = if spec.speed_max > spec.speed_min {
        rng.gen_range(spec.speed_min..=spec.speed_max)
    } else {
        spec.speed_min
    };
    let total = OBS_LEN + FUTURE_LEN;
    let change = rng.gen_bool(spec.lane_change_prob.clamp(0.0, 1.0));
    let (path, label) = sample_agent(world, lanes, total, speed, change, &mut rng);
    let track: Vec<LocalPoint> = (0..total)
        .map(|i| quantize_point(jitter(path.at(speed * DT * i as f64), &mut rng)))
        .collect();

    let n_bg = rng.gen_range(0..=spec.max_background);
    let target = rng.gen_range(0..=n_bg);
    let mut agents = Vec::with_capacity(n_bg + 1);
    for k in 0..=n_bg {
        if k == target {
            agents.push(track[..OBS_LEN].to_vec());
            continue;
        }
        let v = rng.gen_range(spec.speed_min..=spec.speed_max.max(spec.speed_min));
        let (p, _) = sample_agent(world, lanes, OBS_LEN, v, false, &mut rng);
        agents.push(
            (0..OBS_LEN)
                .map(|i| quantize_point(jitter(p.at(v * DT * i as f64), &mut rng)))
                .collect(),
        );
    }
    GeneratedScene {
        scene: Scene {
            scene_id: id,
            agents,
            target,
            future: track[OBS_LEN..].to_vec(),
        },
        label,
        speed,
    }
}

#[cfg(test)]
mod tests {
    use super::super::world::{generate_world, WorldSpec};
    use super::*;

    fn straight_world() -> MapPair {
        generate_world(&WorldSpec {
            roads: 1,
            intersections: 0,
            lanes_min: 1,
            lanes_max: 1,
            curvature_max: 0.0,
            ..WorldSpec::default()
        })
    }

    #[test]
    fn constant_speed_kinematics() {
        let spec = SceneSpec {
            speed_min: 10.0,
            speed_max: 10.0,
            noise_sigma: 0.0,
            lane_change_prob: 0.0,
            max_background: 0,
        };
        let scenes = generate_scenes(&straight_world(), 5, 3, &spec);
        for g in &scenes {
            let f = &g.scene.future;
            for w in f.windows(2) {
                assert!((w[0].distance(&w[1]) - 1.0).abs() < 1e-5);
            }
            assert!((g.scene.last_observed().distance(&f[0]) - 1.0).abs() < 1e-5);
            g.scene.validate().unwrap();
        }
    }

    #[test]
    fn seeded_determinism() {
        let w = generate_world(&WorldSpec::default());
        let a = generate_scenes(&w, 20, 11, &SceneSpec::default());
        let b = generate_scenes(&w, 20, 11, &SceneSpec::default());
        assert_eq!(a, b);
        let c = generate_scenes(&w, 20, 12, &SceneSpec::default());
        assert_ne!(a, c);
    }
}
