//! Radar detection generators.
//!
//! Four generators map a ground-truth frame to a point cloud:
//!
//! * [`irm`]: ideal model, exact noise-free points on the target shell.
//! * [`ddm`]: data-driven model sampling a learned detection distribution.
//! * [`rtm`]: ray-tracing model with a radar-equation detection threshold.
//! * [`reference`]: the ray tracer plus measurement noise, dropouts and
//!   clutter; it stands in for a real sensor recording.
//!
//! Every generator upholds the same output contract: all detections lie
//! inside the sensor's coverage (`0 < r <= range_max`, `|phi| <=
//! fov_azimuth`) with finite values. Given the same frame, parameters and
//! seed, output is identical call to call; the ideal model takes no seed at
//! all.

pub mod ddm;
pub mod irm;
pub mod reference;
pub mod rtm;

use crate::scenario::WorldSensor;
use serde::{Deserialize, Serialize};

/// One radar return in the sensor frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Radial distance (m).
    pub r: f64,
    /// Azimuth from boresight, counter-clockwise positive (rad).
    pub phi: f64,
    /// Radial velocity, negative while closing (m/s).
    pub doppler: f64,
}

/// All returns of one frame. Detections are an unordered multiset; the
/// vector order is an implementation detail consumers must not rely on
/// (every consumer in this crate is order-insensitive).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub frame_index: usize,
    pub t: f64,
    pub detections: Vec<Detection>,
}

impl PointCloud {
    pub fn empty(frame_index: usize, t: f64) -> PointCloud {
        PointCloud { frame_index, t, detections: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Observe a world point moving with velocity `v` from the sensor; `None`
/// when the point falls outside the coverage cone.
pub(crate) fn observe_point(
    ws: &WorldSensor,
    p: crate::geometry::Vec2,
    v: crate::geometry::Vec2,
) -> Option<Detection> {
    let (r, phi) = ws.to_polar(p);
    if !ws.in_fov(r, phi) {
        return None;
    }
    Some(Detection { r, phi, doppler: ws.radial_velocity(p, v) })
}
