//! Synthetic worlds, scenes and the scene file format.

mod io;
mod scenes;
mod world;

pub use io::{
    parse_scene_line, read_scenes, read_scenes_from, scene_to_line, write_scenes, write_scenes_to, SceneIoError,
};
pub use scenes::{generate_scenes, GeneratedScene, ManeuverLabel, Scene, SceneSpec, DT, FUTURE_LEN, OBS_LEN};
pub use world::{
    generate_world, sample_bezier, Lane, LaneKind, Maneuver, MapPair, Piece, Road, RoadGeometry, WorldSpec,
    VERTEX_SPACING,
};
