//! The downstream consumer of radar data: clustering plus multi-object
//! tracking with oriented-box shape estimation. The evaluation never looks
//! inside; it only compares the tracks this pipeline produces on simulated
//! versus reference clouds.

pub mod clustering;
pub mod tracker;

pub use clustering::{cluster, Cluster};
pub use tracker::{run_perception, PerceptionConfig, TrackEstimate, Tracker};
