//! Navigation-map query API.
//!
//! A [`NavGraph`] holds road-level nodes in geographic coordinates and
//! directed road segments between them. [`LocalNavGraph`] projects it into a
//! city frame and answers the queries an HD-map API would: segments near a
//! point, and succeeding/preceding segments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{self, CityFrame, GeoError, GeoPoint, LocalPoint};

/// Polyline resampling step used for road segment geometry, in metres.
pub const DEFAULT_STEP: f64 = 2.0;

pub type NodeId = i64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge {0} does not exist")]
    UnknownEdge(usize),
    #[error("edge ({0}, {1}) references a missing node")]
    DanglingEdge(NodeId, NodeId),
    #[error("self-loop edge on node {0}")]
    SelfLoop(NodeId),
    #[error("graph file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("node {node}: {source}")]
    Projection {
        node: NodeId,
        #[source]
        source: GeoError,
    },
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Directed road graph with geographic node positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NavGraph {
    nodes: BTreeMap<NodeId, GeoPoint>,
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl NavGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_node(&mut self, id: NodeId, p: GeoPoint) {
        self.nodes.insert(id, p);
    }

    /// Inserts a directed edge. Returns `false` if it was already present.
    pub fn insert_edge(&mut self, src: NodeId, dst: NodeId) -> Result<bool> {
        if src == dst {
            return Err(GraphError::SelfLoop(src));
        }
        if !self.nodes.contains_key(&src) || !self.nodes.contains_key(&dst) {
            return Err(GraphError::DanglingEdge(src, dst));
        }
        Ok(self.edges.insert((src, dst)))
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, GeoPoint> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops nodes that no edge touches.
    pub fn retain_connected_nodes(&mut self) {
        let used: BTreeSet<NodeId> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        self.nodes.retain(|id, _| used.contains(id));
    }

    /// Serializes to the line-oriented graph format: `N id lat lon` lines
    /// sorted by id, then `E src dst` lines sorted by (src, dst). Coordinates
    /// carry exactly nine fractional digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 40 + self.edges.len() * 24);
        for (id, p) in &self.nodes {
            let _ = writeln!(out, "N {id} {:.9} {:.9}", p.lat, p.lon);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "E {a} {b}");
        }
        out
    }

    /// Parses the format written by [`NavGraph::to_text`]. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut g = NavGraph::new();
        let mut pending_edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = s.split_whitespace().collect();
            let bad = |msg: &str| GraphError::Format {
                line,
                msg: format!("{msg}: '{s}'"),
            };
            match fields.as_slice() {
                ["N", id, lat, lon] => {
                    let id: NodeId = id.parse().map_err(|_| bad("bad node id"))?;
                    let lat: f64 = lat.parse().map_err(|_| bad("bad latitude"))?;
                    let lon: f64 = lon.parse().map_err(|_| bad("bad longitude"))?;
                    let p = GeoPoint::new(lat, lon).map_err(|e| bad(&e.to_string()))?;
                    if g.nodes.insert(id, p).is_some() {
                        return Err(bad("duplicate node id"));
                    }
                }
                ["E", a, b] => {
                    let a: NodeId = a.parse().map_err(|_| bad("bad edge source"))?;
                    let b: NodeId = b.parse().map_err(|_| bad("bad edge target"))?;
                    pending_edges.push((line, a, b));
                }
                _ => return Err(bad("unrecognized record")),
            }
        }
        for (line, a, b) in pending_edges {
            g.insert_edge(a, b).map_err(|e| GraphError::Format {
                line,
                msg: e.to_string(),
            })?;
        }
        Ok(g)
    }
}

/// Index of an edge in a [`LocalNavGraph`]. Edges are numbered in ascending
/// (src, dst) order, so ids do not depend on insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl std::fmt::Display for EdgeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadSegment {
    pub edge_id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub polyline: Vec<LocalPoint>,
}

type IndexedBox = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// A [`NavGraph`] projected into a city frame, with a spatial index over
/// edge bounding boxes.
#[derive(Debug, Clone)]
pub struct LocalNavGraph {
    graph: NavGraph,
    frame: CityFrame,
    local: BTreeMap<NodeId, LocalPoint>,
    edges: Vec<(NodeId, NodeId)>,
    chords: Vec<(LocalPoint, LocalPoint)>,
    out_edges: BTreeMap<NodeId, Vec<usize>>,
    in_edges: BTreeMap<NodeId, Vec<usize>>,
    index: RTree<IndexedBox>,
}

/// Projects every node of `g` into `frame` and builds the spatial index.
pub fn localize(g: &NavGraph, frame: &CityFrame) -> Result<LocalNavGraph> {
    let mut local = BTreeMap::new();
    for (&id, &p) in &g.nodes {
        let lp = geo::geo_to_local(p, frame).map_err(|source| GraphError::Projection { node: id, source })?;
        local.insert(id, lp);
    }
    Ok(LocalNavGraph::assemble(g.clone(), frame.clone(), local))
}

impl LocalNavGraph {
    /// Builds a graph from nodes already in local coordinates. Geographic
    /// positions are recovered through the inverse projection, but the
    /// supplied local positions are kept verbatim.
    pub fn from_local(
        nodes: impl IntoIterator<Item = (NodeId, LocalPoint)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        frame: &CityFrame,
    ) -> Result<Self> {
        let mut graph = NavGraph::new();
        let mut local = BTreeMap::new();
        for (id, lp) in nodes {
            let gp = geo::local_to_geo(lp, frame).map_err(|source| GraphError::Projection { node: id, source })?;
            graph.insert_node(id, gp);
            local.insert(id, lp);
        }
        for (a, b) in edges {
            graph.insert_edge(a, b)?;
        }
        Ok(Self::assemble(graph, frame.clone(), local))
    }

    fn assemble(graph: NavGraph, frame: CityFrame, local: BTreeMap<NodeId, LocalPoint>) -> Self {
        let edges: Vec<(NodeId, NodeId)> = graph.edges.iter().copied().collect();
        let mut out_edges: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        let mut in_edges: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        let mut chords = Vec::with_capacity(edges.len());
        let mut boxes = Vec::with_capacity(edges.len());
        for (i, &(a, b)) in edges.iter().enumerate() {
            out_edges.entry(a).or_default().push(i);
            in_edges.entry(b).or_default().push(i);
            let pa = local[&a];
            let pb = local[&b];
            chords.push((pa, pb));
            let rect = Rectangle::from_corners([pa.x, pa.y], [pb.x, pb.y]);
            boxes.push(GeomWithData::new(rect, i));
        }
        Self {
            graph,
            frame,
            local,
            edges,
            chords,
            out_edges,
            in_edges,
            index: RTree::bulk_load(boxes),
        }
    }

    pub fn graph(&self) -> &NavGraph {
        &self.graph
    }

    /// Graph text (see [`NavGraph::to_text`]) preceded by a
    /// `# frame <name> <zone> <easting> <northing>` header line.
    pub fn to_text(&self) -> String {
        let f = &self.frame;
        format!(
            "# frame {} {} {:?} {:?}\n{}",
            f.name,
            f.zone,
            f.origin_easting,
            f.origin_northing,
            self.graph.to_text()
        )
    }

    /// Parses [`LocalNavGraph::to_text`] output; the frame header must be
    /// the first line.
    pub fn from_text(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("");
        let bad = |msg: String| GraphError::Format { line: 1, msg };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let frame = match fields.as_slice() {
            ["#", "frame", name, zone, e, n] => {
                let zone: u8 = zone.parse().map_err(|_| bad(format!("bad zone in '{header}'")))?;
                let e: f64 = e.parse().map_err(|_| bad(format!("bad easting in '{header}'")))?;
                let n: f64 = n.parse().map_err(|_| bad(format!("bad northing in '{header}'")))?;
                CityFrame::new(*name, zone, e, n).map_err(|e| bad(e.to_string()))?
            }
            _ => {
                return Err(bad(format!(
                    "expected '# frame <name> <zone> <easting> <northing>', got '{header}'"
                )))
            }
        };
        localize(&NavGraph::from_text(text)?, &frame)
    }

    pub fn frame(&self) -> &CityFrame {
        &self.frame
    }

    pub fn local_position(&self, id: NodeId) -> Option<LocalPoint> {
        self.local.get(&id).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_count(&self) -> usize {
        self.local.len()
    }

    pub fn edge(&self, id: EdgeId) -> Result<(NodeId, NodeId)> {
        self.edges.get(id.0).copied().ok_or(GraphError::UnknownEdge(id.0))
    }

    pub fn edge_id(&self, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        self.edges.binary_search(&(src, dst)).ok().map(EdgeId)
    }

    /// Straight src→dst geometry of an edge.
    pub fn chord(&self, id: EdgeId) -> Result<(LocalPoint, LocalPoint)> {
        self.chords.get(id.0).copied().ok_or(GraphError::UnknownEdge(id.0))
    }

    pub fn segment(&self, id: EdgeId, step: f64) -> Result<RoadSegment> {
        let (src, dst) = self.edge(id)?;
        let (a, b) = self.chords[id.0];
        Ok(RoadSegment {
            edge_id: id,
            src,
            dst,
            polyline: resample_polyline(a, b, step),
        })
    }

    /// Ids of edges whose chord lies within `radius` of `center`, ascending.
    pub fn edge_ids_in_radius(&self, center: LocalPoint, radius: f64) -> Vec<EdgeId> {
        if !(radius > 0.0) {
            return Vec::new();
        }
        let envelope = AABB::from_corners(
            [center.x - radius, center.y - radius],
            [center.x + radius, center.y + radius],
        );
        let mut ids: Vec<EdgeId> = self
            .index
            .locate_in_envelope_intersecting(&envelope)
            .map(|g| g.data)
            .filter(|&i| {
                let (a, b) = self.chords[i];
                point_segment_distance(center, a, b) <= radius
            })
            .map(EdgeId)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Road segments within `radius` of `center`, resampled at `step`.
    pub fn segments_in_radius(&self, center: LocalPoint, radius: f64, step: f64) -> Vec<RoadSegment> {
        self.edge_ids_in_radius(center, radius)
            .into_iter()
            .map(|id| {
                let (src, dst) = self.edges[id.0];
                let (a, b) = self.chords[id.0];
                RoadSegment {
                    edge_id: id,
                    src,
                    dst,
                    polyline: resample_polyline(a, b, step),
                }
            })
            .collect()
    }

    /// All resampled points of the segments in radius, concatenated in
    /// edge order.
    pub fn points_in_radius(&self, center: LocalPoint, radius: f64, step: f64) -> Vec<LocalPoint> {
        self.segments_in_radius(center, radius, step)
            .into_iter()
            .flat_map(|s| s.polyline)
            .collect()
    }

    /// Edges leaving this edge's target node, except the edge straight back.
    pub fn successors(&self, id: EdgeId) -> Result<Vec<EdgeId>> {
        let (src, dst) = self.edge(id)?;
        Ok(self
            .out_edges
            .get(&dst)
            .into_iter()
            .flatten()
            .filter(|&&j| self.edges[j].1 != src)
            .map(|&j| EdgeId(j))
            .collect())
    }

    /// Edges entering this edge's source node, except the edge straight back.
    pub fn predecessors(&self, id: EdgeId) -> Result<Vec<EdgeId>> {
        let (src, dst) = self.edge(id)?;
        Ok(self
            .in_edges
            .get(&src)
            .into_iter()
            .flatten()
            .filter(|&&j| self.edges[j].0 != dst)
            .map(|&j| EdgeId(j))
            .collect())
    }
}

/// Euclidean distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: LocalPoint, a: LocalPoint, b: LocalPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let q = LocalPoint::new(a.x + t * dx, a.y + t * dy);
    p.distance(&q)
}

/// Uniformly spaced points from `src` to `dst`, both included. The number of
/// pieces is `max(1, ceil(length / step))`, so spacing never exceeds `step`.
pub fn resample_polyline(src: LocalPoint, dst: LocalPoint, step: f64) -> Vec<LocalPoint> {
    assert!(step > 0.0, "resample step must be positive, got {step}");
    let len = src.distance(&dst);
    let n = ((len / step).ceil() as usize).max(1);
    let (dx, dy) = (dst.x - src.x, dst.y - src.y);
    let nf = n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(src);
    for i in 1..n {
        let fi = i as f64;
        out.push(LocalPoint::new(src.x + dx * fi / nf, src.y + dy * fi / nf));
    }
    out.push(dst);
    out
}
