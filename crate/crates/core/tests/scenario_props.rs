use navmap_core::geo::LocalPoint;
use navmap_core::road_graph::point_segment_distance;
use navmap_core::scenario::{
    generate_scenes, generate_world, read_scenes_from, write_scenes_to, LaneKind, MapPair, Scene, SceneSpec, WorldSpec,
    FUTURE_LEN, OBS_LEN,
};
use proptest::prelude::*;

fn world(seed: u64) -> MapPair {
    generate_world(&WorldSpec {
        seed,
        ..WorldSpec::default()
    })
}

fn scenes(w: &MapPair, n: usize, seed: u64) -> Vec<Scene> {
    generate_scenes(w, n, seed, &SceneSpec::default())
        .into_iter()
        .map(|g| g.scene)
        .collect()
}

fn bytes(scenes: &[Scene]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_scenes_to(&mut buf, scenes).unwrap();
    buf
}

fn distance_to_lanes(w: &MapPair, p: LocalPoint) -> f64 {
    w.lanes
        .iter()
        .flat_map(|l| l.centerline.windows(2))
        .map(|s| point_segment_distance(p, s[0], s[1]))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn futures_stay_near_a_lane() {
    let w = world(3);
    let mut worst = 0.0f64;
    for s in scenes(&w, 200, 17) {
        assert_eq!(s.future.len(), FUTURE_LEN);
        assert!(s.agents.iter().all(|a| a.len() == OBS_LEN));
        for p in &s.future {
            worst = worst.max(distance_to_lanes(&w, *p));
        }
    }
    assert!(worst < 5.0, "{worst}");
}

#[test]
fn maneuver_label_balance() {
    let w = world(0);
    let generated = generate_scenes(&w, 500, 0, &SceneSpec::default());
    let eventful = generated
        .iter()
        .filter(|g| g.label.turned || g.label.changed_lane)
        .count();
    let frac = eventful as f64 / generated.len() as f64;
    eprintln!("{eventful} of 500 scenes turn or change lane");
    assert!(frac >= 0.2, "{frac}");
}

#[test]
fn files_are_byte_identical_per_seed() {
    let a = bytes(&scenes(&world(4), 60, 9));
    let b = bytes(&scenes(&world(4), 60, 9));
    assert_eq!(a, b);
    assert_ne!(a, bytes(&scenes(&world(4), 60, 10)));
    let wa = serde_json::to_string(&world(4)).unwrap();
    assert_eq!(wa, serde_json::to_string(&world(4)).unwrap());
}

#[test]
fn hundred_scene_round_trip() {
    let s = scenes(&world(5), 100, 1);
    let back = read_scenes_from(&bytes(&s)[..]).unwrap();
    assert_eq!(back, s);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn nav_polyline_is_mean_of_its_lanes(seed in 0u64..1000, lanes_max in 1usize..=3) {
        let w = generate_world(&WorldSpec { seed, lanes_max, ..WorldSpec::default() });
        for road in &w.roads {
            let lanes: Vec<_> = road.lanes.iter().map(|&i| &w.lanes[i]).collect();
            let all_road = lanes.iter().all(|l| matches!(l.kind, LaneKind::Road { .. }));
            prop_assert!(all_road);
            for (j, c) in road.centerline.iter().enumerate() {
                let n = lanes.len() as f64;
                let mx = lanes.iter().map(|l| l.centerline[j].x).sum::<f64>() / n;
                let my = lanes.iter().map(|l| l.centerline[j].y).sum::<f64>() / n;
                prop_assert!((mx - c.x).abs() < 1e-9 && (my - c.y).abs() < 1e-9);
            }
        }
    }
}
