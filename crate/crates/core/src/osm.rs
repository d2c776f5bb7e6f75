//! OSM XML ingestion.
//!
//! Only `<node>`, `<way>`, `<nd>` and `<tag>` are read; everything else in
//! the document (relations, bounds, changesets, node tags) is skipped. The
//! road graph keeps car-accessible `highway` types only.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::road_graph::{NavGraph, NodeId};

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: i64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = OsmError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsmNode {
    pub id: i64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OsmWay {
    pub id: i64,
    pub node_refs: Vec<i64>,
    pub tags: BTreeMap<String, String>,
}

impl OsmWay {
    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OsmDocument {
    pub nodes: Vec<OsmNode>,
    pub ways: Vec<OsmWay>,
}

/// The thirteen car-accessible `highway` values kept in the road graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoadTypeWhitelist {
    types: BTreeSet<&'static str>,
}

pub const CAR_ROAD_TYPES: [&str; 13] = [
    "motorway",
    "trunk",
    "primary",
    "secondary",
    "tertiary",
    "unclassified",
    "residential",
    "motorway_link",
    "trunk_link",
    "primary_link",
    "secondary_link",
    "tertiary_link",
    "living_street",
];

impl Default for RoadTypeWhitelist {
    fn default() -> Self {
        Self {
            types: CAR_ROAD_TYPES.into_iter().collect(),
        }
    }
}

impl RoadTypeWhitelist {
    pub fn contains(&self, highway: &str) -> bool {
        self.types.contains(highway)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

/// Direction in which a way's node sequence may be travelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Both,
    Forward,
    Backward,
}

impl Direction {
    pub fn of(way: &OsmWay) -> Self {
        match way.tag("oneway") {
            Some("yes" | "1" | "true") => Direction::Forward,
            Some("-1") => Direction::Backward,
            _ => Direction::Both,
        }
    }

    /// Directed edges produced per consecutive node pair.
    pub fn multiplicity(self) -> usize {
        match self {
            Direction::Both => 2,
            _ => 1,
        }
    }
}

fn line_col(input: &[u8], offset: usize) -> (usize, usize) {
    let upto = &input[..offset.min(input.len())];
    let line = upto.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = upto.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, column)
}

struct Cursor<'a> {
    input: &'a [u8],
}

impl Cursor<'_> {
    fn error(&self, offset: usize, msg: impl Into<String>) -> OsmError {
        // Event offsets point at the whitespace preceding the element.
        let offset = offset
            + self.input[offset.min(self.input.len())..]
                .iter()
                .take_while(|b| b.is_ascii_whitespace())
                .count();
        let (line, column) = line_col(self.input, offset);
        OsmError::Parse {
            line,
            column,
            msg: msg.into(),
        }
    }

    fn attrs(&self, e: &BytesStart<'_>, offset: usize) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| self.error(offset, err.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|err| self.error(offset, err.to_string()))?
                .into_owned();
            out.insert(key, value);
        }
        Ok(out)
    }

    fn required<T: std::str::FromStr>(
        &self,
        attrs: &BTreeMap<String, String>,
        element: &str,
        key: &str,
        offset: usize,
    ) -> Result<T> {
        let raw = attrs
            .get(key)
            .ok_or_else(|| self.error(offset, format!("<{element}> is missing attribute '{key}'")))?;
        raw.parse()
            .map_err(|_| self.error(offset, format!("<{element}> has invalid {key}='{raw}'")))
    }
}

pub fn parse_osm_reader(mut r: impl Read) -> Result<OsmDocument> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    parse_osm(&buf)
}

/// Parses an OSM XML document whose root element is `<osm>`.
pub fn parse_osm(input: &[u8]) -> Result<OsmDocument> {
    let cur = Cursor { input };
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(true);
    reader.config_mut().check_end_names = true;

    let mut doc = OsmDocument::default();
    let mut node_ids = HashSet::new();
    let mut way_ids = HashSet::new();
    let mut buf = Vec::new();
    // Element nesting below the root; `None` until <osm> is seen.
    let mut depth: Option<usize> = None;
    let mut seen_root = false;
    let mut current_way: Option<OsmWay> = None;

    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader.read_event_into(&mut buf).map_err(|err| {
            let pos = reader.error_position() as usize;
            cur.error(pos, err.to_string())
        })?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = e.name();
                let name = name.as_ref();
                let Some(d) = depth else {
                    if name != b"osm" {
                        return Err(cur.error(
                            offset,
                            format!("root element is <{}>, expected <osm>", String::from_utf8_lossy(name)),
                        ));
                    }
                    if seen_root {
                        return Err(cur.error(offset, "multiple <osm> root elements"));
                    }
                    seen_root = true;
                    if !is_empty {
                        depth = Some(0);
                    }
                    buf.clear();
                    continue;
                };
                match (d, name) {
                    (0, b"node") => {
                        let attrs = cur.attrs(e, offset)?;
                        let id: i64 = cur.required(&attrs, "node", "id", offset)?;
                        let lat: f64 = cur.required(&attrs, "node", "lat", offset)?;
                        let lon: f64 = cur.required(&attrs, "node", "lon", offset)?;
                        GeoPoint::new(lat, lon).map_err(|err| cur.error(offset, format!("node {id}: {err}")))?;
                        if !node_ids.insert(id) {
                            return Err(OsmError::DuplicateId { kind: "node", id });
                        }
                        doc.nodes.push(OsmNode { id, lat, lon });
                    }
                    (0, b"way") => {
                        let attrs = cur.attrs(e, offset)?;
                        let id: i64 = cur.required(&attrs, "way", "id", offset)?;
                        if !way_ids.insert(id) {
                            return Err(OsmError::DuplicateId { kind: "way", id });
                        }
                        let way = OsmWay {
                            id,
                            ..OsmWay::default()
                        };
                        if is_empty {
                            doc.ways.push(way);
                        } else {
                            current_way = Some(way);
                        }
                    }
                    (1, b"nd") => {
                        if let Some(way) = current_way.as_mut() {
                            let attrs = cur.attrs(e, offset)?;
                            way.node_refs.push(cur.required(&attrs, "nd", "ref", offset)?);
                        }
                    }
                    (1, b"tag") => {
                        if let Some(way) = current_way.as_mut() {
                            let attrs = cur.attrs(e, offset)?;
                            let k: String = cur.required(&attrs, "tag", "k", offset)?;
                            let v: String = cur.required(&attrs, "tag", "v", offset)?;
                            way.tags.insert(k, v);
                        }
                    }
                    _ => {}
                }
                if !is_empty {
                    depth = Some(d + 1);
                }
            }
            Event::End(_) => match depth {
                Some(0) => depth = None,
                Some(d) => {
                    if d == 1 {
                        if let Some(way) = current_way.take() {
                            doc.ways.push(way);
                        }
                    }
                    depth = Some(d - 1);
                }
                None => return Err(cur.error(offset, "unexpected closing tag")),
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if depth.is_some() {
        return Err(cur.error(input.len(), "unterminated <osm> element"));
    }
    if !seen_root {
        return Err(cur.error(0, "document has no <osm> root element"));
    }
    Ok(doc)
}

/// Why a way did not contribute to the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    MissingNode(i64),
    TooShort,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub retained_ways: usize,
    pub filtered_ways: usize,
    /// Ways dropped despite an accepted `highway` type.
    pub skipped: Vec<(i64, SkipReason)>,
}

/// Builds the directed road graph from parsed OSM data.
///
/// Ways without a whitelisted `highway` tag are discarded. Each retained way
/// contributes one edge per consecutive node pair in each permitted
/// direction. Ways that reference unknown nodes are skipped whole.
pub fn build_nav_graph(doc: &OsmDocument, whitelist: &RoadTypeWhitelist) -> (NavGraph, BuildReport) {
    let positions: BTreeMap<i64, GeoPoint> = doc
        .nodes
        .iter()
        .map(|n| (n.id, GeoPoint { lat: n.lat, lon: n.lon }))
        .collect();
    let mut graph = NavGraph::new();
    let mut report = BuildReport::default();

    for way in &doc.ways {
        if !way.tag("highway").is_some_and(|h| whitelist.contains(h)) {
            report.filtered_ways += 1;
            continue;
        }
        if let Some(&missing) = way.node_refs.iter().find(|r| !positions.contains_key(r)) {
            log::warn!("skipping way {}: node {missing} is not in the document", way.id);
            report.skipped.push((way.id, SkipReason::MissingNode(missing)));
            continue;
        }
        if way.node_refs.len() < 2 {
            log::warn!("skipping way {}: fewer than two node refs", way.id);
            report.skipped.push((way.id, SkipReason::TooShort));
            continue;
        }
        report.retained_ways += 1;
        for id in &way.node_refs {
            graph.insert_node(*id as NodeId, positions[id]);
        }
        let dir = Direction::of(way);
        for pair in way.node_refs.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                continue;
            }
            if matches!(dir, Direction::Both | Direction::Forward) {
                graph.insert_edge(a, b).expect("nodes inserted above");
            }
            if matches!(dir, Direction::Both | Direction::Backward) {
                graph.insert_edge(b, a).expect("nodes inserted above");
            }
        }
    }
    graph.retain_connected_nodes();
    (graph, report)
}

/// Writes a graph as OSM XML, one oneway way per directed edge. Feeding the
/// output back through [`parse_osm`] and [`build_nav_graph`] reproduces the
/// graph.
pub fn write_osm(graph: &NavGraph) -> String {
    use std::fmt::Write as _;
    let mut out =
        String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"navmap\">\n");
    for (id, p) in graph.nodes() {
        let _ = writeln!(out, "  <node id=\"{id}\" lat=\"{:.9}\" lon=\"{:.9}\"/>", p.lat, p.lon);
    }
    for (i, (a, b)) in graph.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "  <way id=\"{}\">\n    <nd ref=\"{a}\"/>\n    <nd ref=\"{b}\"/>\n    <tag k=\"highway\" v=\"residential\"/>\n    <tag k=\"oneway\" v=\"yes\"/>\n  </way>",
            i + 1
        );
    }
    out.push_str("</osm>\n");
    out
}
