//! Synthetic road worlds with paired lane-level and road-level views.
//!
//! Intersections sit on a jittered grid. Every grid adjacency can carry two
//! one-directional carriageways, each built from line and arc pieces and
//! offset to the right of the street axis. Each carriageway has 1–3 lanes
//! at lateral offsets `(j - (n-1)/2) * lane_width`; the road-level polyline
//! is their mean. At intersections, connector lanes (cubic Béziers) join
//! incoming to outgoing lanes; the road-level view instead routes through a
//! single junction node, as an OSM extract would.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geo::{CityFrame, LocalPoint};
use crate::road_graph::{GraphError, LocalNavGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub seed: u64,
    /// Number of directed carriageways.
    pub roads: usize,
    pub intersections: usize,
    pub lanes_min: usize,
    pub lanes_max: usize,
    pub lane_width: f64,
    /// Range of |curvature| (1/m) used for curved road pieces.
    pub curvature_min: f64,
    pub curvature_max: f64,
    /// Grid spacing between intersections, metres.
    pub block_length: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            roads: 48,
            intersections: 16,
            lanes_min: 1,
            lanes_max: 3,
            lane_width: 3.5,
            curvature_min: 0.0,
            curvature_max: 0.02,
            block_length: 160.0,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lane_width > 0.0 && self.lane_width.is_finite()) {
            return Err(format!("lane width must be positive, got {}", self.lane_width));
        }
        if self.lanes_min < 1 || self.lanes_max > 3 || self.lanes_min > self.lanes_max {
            return Err(format!(
                "lanes per road must satisfy 1 <= min <= max <= 3, got {}..={}",
                self.lanes_min, self.lanes_max
            ));
        }
        if !(self.curvature_min >= 0.0 && self.curvature_min <= self.curvature_max && self.curvature_max < 0.2) {
            return Err(format!(
                "curvature range must satisfy 0 <= min <= max < 0.2, got [{}, {}]",
                self.curvature_min, self.curvature_max
            ));
        }
        if !(self.block_length >= 60.0 && self.block_length.is_finite()) {
            return Err(format!("block length must be at least 60 m, got {}", self.block_length));
        }
        Ok(())
    }
}

/// Setback of road ends from the intersection centre.
const SETBACK: f64 = 12.0;
/// Gap between opposing carriageways.
const MEDIAN: f64 = 1.0;
/// Spacing of polyline vertices along roads.
pub const VERTEX_SPACING: f64 = 5.0;
/// Spacing of connector polyline vertices.
const CONNECTOR_SPACING: f64 = 2.0;
/// Length of free-standing roads.
const FREE_ROAD_LENGTH: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Line { length: f64 },
    Arc { length: f64, curvature: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Line { length } | Piece::Arc { length, .. } => length,
        }
    }
}

/// Centerline geometry as a turtle path of line and arc pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadGeometry {
    pub start: LocalPoint,
    pub heading: f64,
    pub pieces: Vec<Piece>,
}

fn advance(p: LocalPoint, heading: f64, piece: Piece, s: f64) -> (LocalPoint, f64) {
    match piece {
        Piece::Line { .. } | Piece::Arc { curvature: 0.0, .. } => (
            LocalPoint::new(p.x + s * heading.cos(), p.y + s * heading.sin()),
            heading,
        ),
        Piece::Arc { curvature: k, .. } => {
            let h1 = heading + k * s;
            (
                LocalPoint::new(
                    p.x + (h1.sin() - heading.sin()) / k,
                    p.y + (heading.cos() - h1.cos()) / k,
                ),
                h1,
            )
        }
    }
}

impl RoadGeometry {
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    /// Position and heading at arc length `u` (clamped to the road).
    pub fn pose_at(&self, u: f64) -> (LocalPoint, f64) {
        let mut p = self.start;
        let mut h = self.heading;
        let mut rest = u.max(0.0);
        for (i, piece) in self.pieces.iter().enumerate() {
            let len = piece.length();
            if rest <= len || i + 1 == self.pieces.len() {
                return advance(p, h, *piece, rest.min(len));
            }
            (p, h) = advance(p, h, *piece, len);
            rest -= len;
        }
        (p, h)
    }

    /// Position offset laterally by `offset` metres (positive = left).
    pub fn offset_point(&self, u: f64, offset: f64) -> LocalPoint {
        let (p, h) = self.pose_at(u);
        LocalPoint::new(p.x - offset * h.sin(), p.y + offset * h.cos())
    }

    pub fn end_pose(&self) -> (LocalPoint, f64) {
        self.pose_at(self.length())
    }

    /// Arc-length parameters of polyline vertices: uniform, ≤ spacing apart.
    pub fn vertex_params(&self, spacing: f64) -> Vec<f64> {
        let len = self.length();
        let n = ((len / spacing).ceil() as usize).max(1);
        (0..=n).map(|i| len * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Maneuver {
    Straight,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: usize,
    pub geometry: RoadGeometry,
    /// Road-level polyline, sampled at the same parameters as its lanes.
    pub centerline: Vec<LocalPoint>,
    /// Lane ids ordered right to left.
    pub lanes: Vec<usize>,
    pub from: Option<usize>,
    pub to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LaneKind {
    /// A lane of a road, at a lateral offset from its centerline.
    Road { road: usize, index: usize, offset: f64 },
    /// A connector through an intersection, as Bézier control points.
    Connector {
        intersection: usize,
        maneuver: Maneuver,
        control: [LocalPoint; 4],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: usize,
    pub kind: LaneKind,
    pub centerline: Vec<LocalPoint>,
    pub successors: Vec<usize>,
}

/// Lane-level and road-level views of the same world.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MapPair {
    pub intersections: Vec<LocalPoint>,
    pub roads: Vec<Road>,
    pub lanes: Vec<Lane>,
}

impl MapPair {
    pub fn is_empty(&self) -> bool {
        self.roads.is_empty()
    }

    pub fn road_lane_count(&self) -> usize {
        self.lanes
            .iter()
            .filter(|l| matches!(l.kind, LaneKind::Road { .. }))
            .count()
    }

    /// Lane-level graph: one node per lane polyline vertex, one edge per
    /// consecutive vertex pair. Connectors reuse the end vertex of their
    /// source lane and the start vertex of their target lane.
    pub fn hd_nodes_edges(&self) -> (Vec<(NodeId, LocalPoint)>, Vec<(NodeId, NodeId)>) {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut first = vec![0; self.lanes.len()];
        let mut last = vec![0; self.lanes.len()];
        let mut next: NodeId = 0;
        for lane in self.lanes.iter().filter(|l| matches!(l.kind, LaneKind::Road { .. })) {
            first[lane.id] = next;
            for (i, p) in lane.centerline.iter().enumerate() {
                nodes.push((next, *p));
                if i > 0 {
                    edges.push((next - 1, next));
                }
                next += 1;
            }
            last[lane.id] = next - 1;
        }
        for lane in &self.lanes {
            let LaneKind::Connector { .. } = lane.kind else {
                continue;
            };
            let src = self
                .lanes
                .iter()
                .find(|l| l.successors.contains(&lane.id))
                .map(|l| last[l.id])
                .expect("connector has a source lane");
            let dst = first[lane.successors[0]];
            let inner = &lane.centerline[1..lane.centerline.len() - 1];
            let mut prev = src;
            for p in inner {
                nodes.push((next, *p));
                edges.push((prev, next));
                prev = next;
                next += 1;
            }
            edges.push((prev, dst));
        }
        (nodes, edges)
    }

    /// Road-level graph: road centerline vertices plus one junction node per
    /// intersection that incoming roads lead into and outgoing roads leave.
    pub fn nav_nodes_edges(&self) -> (Vec<(NodeId, LocalPoint)>, Vec<(NodeId, NodeId)>) {
        let mut nodes: Vec<(NodeId, LocalPoint)> = self
            .intersections
            .iter()
            .enumerate()
            .map(|(i, p)| (i as NodeId, *p))
            .collect();
        let mut edges = Vec::new();
        let mut next = self.intersections.len() as NodeId;
        for road in &self.roads {
            let start = next;
            for (i, p) in road.centerline.iter().enumerate() {
                nodes.push((next, *p));
                if i > 0 {
                    edges.push((next - 1, next));
                }
                next += 1;
            }
            if let Some(j) = road.from {
                edges.push((j as NodeId, start));
            }
            if let Some(j) = road.to {
                edges.push((next - 1, j as NodeId));
            }
        }
        (nodes, edges)
    }

    pub fn hd_graph(&self, frame: &CityFrame) -> Result<LocalNavGraph, GraphError> {
        let (n, e) = self.hd_nodes_edges();
        LocalNavGraph::from_local(n, e, frame)
    }

    pub fn nav_graph(&self, frame: &CityFrame) -> Result<LocalNavGraph, GraphError> {
        let (n, e) = self.nav_nodes_edges();
        LocalNavGraph::from_local(n, e, frame)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = (a + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn sample_curvature(spec: &WorldSpec, rng: &mut impl Rng) -> f64 {
    let k = if spec.curvature_max > spec.curvature_min {
        rng.gen_range(spec.curvature_min..=spec.curvature_max)
    } else {
        spec.curvature_min
    };
    if rng.gen_bool(0.5) {
        k
    } else {
        -k
    }
}

/// Line/arc composition covering `axis_len` along the start heading with zero
/// net lateral offset and heading change: two mirrored S-bumps separated by
/// straight pieces.
fn street_pieces(axis_len: f64, spec: &WorldSpec, rng: &mut impl Rng) -> Vec<Piece> {
    let k = sample_curvature(spec, rng);
    if k == 0.0 {
        return vec![Piece::Line { length: axis_len }];
    }
    let a = (0.3 / k.abs()).min(axis_len / 10.0);
    let bump = |k: f64| {
        [
            Piece::Arc {
                length: a,
                curvature: k,
            },
            Piece::Arc {
                length: 2.0 * a,
                curvature: -k,
            },
            Piece::Arc {
                length: a,
                curvature: k,
            },
        ]
    };
    // Longitudinal extent of one bump.
    let probe = RoadGeometry {
        start: LocalPoint::default(),
        heading: 0.0,
        pieces: bump(k).to_vec(),
    };
    let extent = probe.end_pose().0.x;
    let lines = (axis_len - 2.0 * extent).max(0.0);
    let w0: f64 = rng.gen_range(0.1..1.0);
    let w1: f64 = rng.gen_range(0.1..1.0);
    let w2: f64 = rng.gen_range(0.1..1.0);
    let total = w0 + w1 + w2;
    let mut pieces = vec![Piece::Line {
        length: lines * w0 / total,
    }];
    pieces.extend(bump(k));
    pieces.push(Piece::Line {
        length: lines * w1 / total,
    });
    pieces.extend(bump(-k));
    pieces.push(Piece::Line {
        length: lines * w2 / total,
    });
    pieces
}

/// Free-standing road: alternating lines and arcs.
fn free_pieces(spec: &WorldSpec, rng: &mut impl Rng) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut len = 0.0;
    while len < FREE_ROAD_LENGTH {
        let line = rng.gen_range(20.0..60.0_f64).min(FREE_ROAD_LENGTH - len);
        pieces.push(Piece::Line { length: line });
        len += line;
        if len >= FREE_ROAD_LENGTH {
            break;
        }
        let k = sample_curvature(spec, rng);
        let arc = if k == 0.0 { 30.0 } else { (0.6 / k.abs()).min(60.0) };
        let arc = arc.min(FREE_ROAD_LENGTH - len);
        pieces.push(Piece::Arc {
            length: arc,
            curvature: k,
        });
        len += arc;
    }
    pieces
}

fn bezier(c: &[LocalPoint; 4], t: f64) -> LocalPoint {
    let u = 1.0 - t;
    let b = [u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t];
    LocalPoint::new(
        b.iter().zip(c).map(|(w, p)| w * p.x).sum(),
        b.iter().zip(c).map(|(w, p)| w * p.y).sum(),
    )
}

/// Samples a Bézier curve at `n + 1` uniform parameter values.
pub fn sample_bezier(c: &[LocalPoint; 4], n: usize) -> Vec<LocalPoint> {
    (0..=n).map(|i| bezier(c, i as f64 / n as f64)).collect()
}

fn connector_control(p0: LocalPoint, h0: f64, p3: LocalPoint, h3: f64) -> [LocalPoint; 4] {
    let d = p0.distance(&p3) / 3.0;
    [
        p0,
        LocalPoint::new(p0.x + d * h0.cos(), p0.y + d * h0.sin()),
        LocalPoint::new(p3.x - d * h3.cos(), p3.y - d * h3.sin()),
        p3,
    ]
}

/// Builds a world. Deterministic in `spec`.
pub fn generate_world(spec: &WorldSpec) -> MapPair {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut world = MapPair::default();
    if spec.roads == 0 {
        return world;
    }

    // Intersections on a jittered grid.
    let cols = (spec.intersections as f64).sqrt().ceil() as usize;
    let jitter = spec.block_length * 0.08;
    for i in 0..spec.intersections {
        let (c, r) = (i % cols, i / cols);
        world.intersections.push(LocalPoint::new(
            c as f64 * spec.block_length + rng.gen_range(-jitter..=jitter),
            r as f64 * spec.block_length + rng.gen_range(-jitter..=jitter),
        ));
    }
    let mut links = Vec::new();
    for i in 0..spec.intersections {
        let (c, r) = (i % cols, i / cols);
        if c + 1 < cols && i + 1 < spec.intersections {
            links.push((i, i + 1));
            links.push((i + 1, i));
        }
        if i + cols < spec.intersections {
            links.push((i, i + cols));
            links.push((i + cols, i));
        }
        let _ = r;
    }
    links.shuffle(&mut rng);
    links.truncate(spec.roads);
    links.sort_unstable();

    let mut geometries: Vec<(RoadGeometry, Option<usize>, Option<usize>, usize)> = Vec::new();
    for &(a, b) in &links {
        let pa = world.intersections[a];
        let pb = world.intersections[b];
        let heading = (pb.y - pa.y).atan2(pb.x - pa.x);
        let lanes = rng.gen_range(spec.lanes_min..=spec.lanes_max);
        // Right-hand traffic: carriageway centre sits right of the axis.
        let shift = lanes as f64 * spec.lane_width / 2.0 + MEDIAN / 2.0;
        let (s, c) = heading.sin_cos();
        let start = LocalPoint::new(pa.x + SETBACK * c + shift * s, pa.y + SETBACK * s - shift * c);
        let axis_len = pa.distance(&pb) - 2.0 * SETBACK;
        let pieces = street_pieces(axis_len, spec, &mut rng);
        geometries.push((RoadGeometry { start, heading, pieces }, Some(a), Some(b), lanes));
    }
    let top = world
        .intersections
        .iter()
        .map(|p| p.y)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let free = spec.roads - geometries.len();
    for i in 0..free {
        let lanes = rng.gen_range(spec.lanes_min..=spec.lanes_max);
        let start = if spec.intersections == 0 {
            LocalPoint::new(0.0, i as f64 * 150.0)
        } else {
            LocalPoint::new(0.0, top + 200.0 + i as f64 * 150.0)
        };
        let pieces = free_pieces(spec, &mut rng);
        geometries.push((
            RoadGeometry {
                start,
                heading: 0.0,
                pieces,
            },
            None,
            None,
            lanes,
        ));
    }

    for (id, (geometry, from, to, n_lanes)) in geometries.into_iter().enumerate() {
        let params = geometry.vertex_params(VERTEX_SPACING);
        let centerline: Vec<LocalPoint> = params.iter().map(|&u| geometry.pose_at(u).0).collect();
        let mut lane_ids = Vec::with_capacity(n_lanes);
        for j in 0..n_lanes {
            let offset = (j as f64 - (n_lanes as f64 - 1.0) / 2.0) * spec.lane_width;
            let lane_id = world.lanes.len();
            world.lanes.push(Lane {
                id: lane_id,
                kind: LaneKind::Road {
                    road: id,
                    index: j,
                    offset,
                },
                centerline: params.iter().map(|&u| geometry.offset_point(u, offset)).collect(),
                successors: Vec::new(),
            });
            lane_ids.push(lane_id);
        }
        world.roads.push(Road {
            id,
            geometry,
            centerline,
            lanes: lane_ids,
            from,
            to,
        });
    }

    // Connectors at each intersection.
    for inc in 0..world.roads.len() {
        let Some(node) = world.roads[inc].to else { continue };
        let (_, h_in) = world.roads[inc].geometry.end_pose();
        let outgoing: Vec<usize> = world
            .roads
            .iter()
            .filter(|r| r.from == Some(node) && world.roads[inc].from != r.to)
            .map(|r| r.id)
            .collect();
        let movements: Vec<(usize, Maneuver)> = outgoing
            .into_iter()
            .map(|out| {
                let turn = wrap_angle(world.roads[out].geometry.heading - h_in);
                let maneuver = if turn.abs() < FRAC_PI_2 / 3.0 {
                    Maneuver::Straight
                } else if turn > 0.0 {
                    Maneuver::Left
                } else {
                    Maneuver::Right
                };
                (out, maneuver)
            })
            .collect();
        let has_straight = movements.iter().any(|(_, m)| *m == Maneuver::Straight);
        for (out, maneuver) in movements {
            let h_out = world.roads[out].geometry.heading;
            let n_in = world.roads[inc].lanes.len();
            let n_out = world.roads[out].lanes.len();
            // Turns leave from the outer lanes; without a straight movement
            // every lane must turn.
            let pairs: Vec<(usize, usize)> = match maneuver {
                Maneuver::Straight => (0..n_in).map(|j| (j, j.min(n_out - 1))).collect(),
                _ if !has_straight => (0..n_in).map(|j| (j, j.min(n_out - 1))).collect(),
                Maneuver::Right => vec![(0, 0)],
                Maneuver::Left => vec![(n_in - 1, n_out - 1)],
            };
            for (j_in, j_out) in pairs {
                let src = world.roads[inc].lanes[j_in];
                let dst = world.roads[out].lanes[j_out];
                let p0 = *world.lanes[src].centerline.last().expect("lane has vertices");
                let p3 = world.lanes[dst].centerline[0];
                let control = connector_control(p0, h_in, p3, h_out);
                let n = ((p0.distance(&p3) * 1.2 / CONNECTOR_SPACING).ceil() as usize).max(2);
                let id = world.lanes.len();
                world.lanes.push(Lane {
                    id,
                    kind: LaneKind::Connector {
                        intersection: node,
                        maneuver,
                        control,
                    },
                    centerline: sample_bezier(&control, n),
                    successors: vec![dst],
                });
                world.lanes[src].successors.push(id);
            }
        }
    }
    world
}
