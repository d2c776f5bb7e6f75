//! Navigation maps for map-aware trajectory prediction.
//!
//! - [`geo`]: WGS84 / UTM / city-frame transforms.
//! - [`osm`]: OSM XML ingestion into a directed road graph.
//! - [`road_graph`]: spatially indexed road segment queries.
//! - [`scenario`]: synthetic paired HD / nav worlds and driving scenes.
//! - [`model`]: map-aware multi-modal predictor with analytic gradients.
//! - [`distill`]: teacher-student training of the fusion embedding.
//! - [`eval`]: minADE / minFDE / miss rate and the minFDE histogram.
//! - [`pipeline`]: dataset assembly and the model-comparison benchmark.

pub mod distill;
pub mod eval;
pub mod geo;
pub mod model;
pub mod osm;
pub mod pipeline;
pub mod road_graph;
pub mod scenario;
