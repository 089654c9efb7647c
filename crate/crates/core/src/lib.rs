//! Radar sensor simulation models and a metric suite that scores how far a
//! simulated sensor is from a reference sensor.
//!
//! The crate is organised along the data flow of an evaluation run:
//!
//! * [`scenario`] builds deterministic traffic scenarios and transforms
//!   object states into the sensor frame.
//! * [`sensor`] holds the detection generators: an ideal model, a
//!   data-driven model, a ray-tracing model and the noisy reference sensor.
//! * [`perception`] turns point clouds into object tracks (clustering,
//!   association, filtering).
//! * [`metrics`] computes point-cloud distances (explicit fidelity) and
//!   tracking errors (implicit fidelity).
//! * [`gap`] normalizes metric values across models and folds them into one
//!   gap score per scenario.
//! * [`pipeline`] wires the stages together for a full run, [`config`] and
//!   [`io`] cover run configuration and on-disk formats.

pub mod config;
pub mod error;
pub mod gap;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod perception;
pub mod pipeline;
pub mod scenario;
pub mod seeds;
pub mod sensor;

pub use error::{Error, Result};
