use navmap_core::osm::{build_nav_graph, parse_osm, write_osm, BuildReport, RoadTypeWhitelist, SkipReason};
use navmap_core::road_graph::NavGraph;

fn build(osm: &str) -> (NavGraph, BuildReport) {
    let doc = parse_osm(osm.as_bytes()).unwrap();
    build_nav_graph(&doc, &RoadTypeWhitelist::default())
}

#[test]
fn whitelist_filtering() {
    let (g, r) = build(include_str!("data/osm/whitelist.osm"));
    assert_eq!(g.to_text(), include_str!("data/osm/whitelist.graph"));
    // footway, service, untagged, building, cycleway
    assert_eq!((r.retained_ways, r.filtered_ways), (2, 5));
    assert!(r.skipped.is_empty());
}

#[test]
fn oneway_handling() {
    let (g, r) = build(include_str!("data/osm/oneway.osm"));
    assert_eq!(g.to_text(), include_str!("data/osm/oneway.graph"));
    assert_eq!((r.retained_ways, r.filtered_ways), (5, 0));
}

#[test]
fn missing_node_refs_skip_the_way() {
    let (g, r) = build(include_str!("data/osm/missing_ref.osm"));
    assert_eq!(g.to_text(), include_str!("data/osm/missing_ref.graph"));
    assert_eq!(r.retained_ways, 2);
    assert_eq!(
        r.skipped,
        vec![
            (30, SkipReason::MissingNode(99)),
            (32, SkipReason::TooShort),
            (34, SkipReason::MissingNode(100)),
        ]
    );
}

#[test]
fn grid_fixture_counts() {
    let (g, r) = build(include_str!("data/osm/grid.osm"));
    assert_eq!(g.node_count(), 40);
    assert_eq!(g.edge_count(), 78);
    assert_eq!((r.retained_ways, r.filtered_ways), (8, 3));
    assert_eq!(r.skipped, vec![(107, SkipReason::MissingNode(999))]);
    // oneway=yes row runs west to east, oneway=-1 row east to west
    assert!(g.edges().contains(&(15, 16)) && !g.edges().contains(&(16, 15)));
    assert!(g.edges().contains(&(37, 36)) && !g.edges().contains(&(36, 37)));
}

#[test]
fn graph_survives_osm_round_trip() {
    let (g, _) = build(include_str!("data/osm/grid.osm"));
    let (back, r) = build(&write_osm(&g));
    assert_eq!(back.to_text(), g.to_text());
    assert_eq!(r.retained_ways, g.edge_count());
}

#[test]
fn empty_document_gives_empty_graph() {
    let (g, r) = build("<osm version=\"0.6\"></osm>");
    assert!(g.is_empty());
    assert_eq!(r, BuildReport::default());
    assert_eq!(g.to_text(), "");
}
