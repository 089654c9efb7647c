//! Ideal radar model.
//!
//! The upper bound on fidelity that geometry alone permits: every target
//! whose shell is at all visible returns a fixed ring of exact, noise-free
//! shell points. There is no detection probability, no measurement noise
//! and no clutter, so any gap it leaves against the reference isolates what
//! idealized geometry cannot explain.

use super::{observe_point, Detection, PointCloud};
use crate::scenario::{frame_visibility, Frame, SensorPose};

/// Detections for one frame: `points_per_object` evenly spaced shell points
/// per visible target, clipped to the coverage cone.
///
/// Visibility is all-or-nothing per object. A partially occluded target
/// still returns its full shell (subject to coverage clipping); only a
/// fully occluded or out-of-view target returns nothing. Each point carries
/// the doppler of the target's center motion. No randomness is involved.
pub fn irm_detect(frame: &Frame, sensor: &SensorPose, points_per_object: usize) -> PointCloud {
    let ws = sensor.world(&frame.ego);
    let mut detections: Vec<Detection> = Vec::new();
    for idx in 0..frame.targets.len() {
        if frame_visibility(frame, idx, sensor) <= 0.0 {
            continue;
        }
        let target = &frame.targets[idx];
        let v = target.velocity();
        for p in target.footprint().shell_points(points_per_object) {
            if let Some(d) = observe_point(&ws, p, v) {
                detections.push(d);
            }
        }
    }
    PointCloud { frame_index: frame.index, t: frame.t, detections }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_scenario, ObjectState, ScenarioKind, ScenarioParams};
    use approx::assert_relative_eq;

    fn frame_with_target(target: ObjectState) -> Frame {
        let ego =
            ObjectState { id: 0, x: 0.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 4.5, width: 1.8 };
        Frame { index: 0, t: 0.0, ego, targets: vec![target] }
    }

    #[test]
    fn full_shell_when_ahead() {
        let target =
            ObjectState { id: 1, x: 22.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 4.5, width: 1.8 };
        let frame = frame_with_target(target);
        let cloud = irm_detect(&frame, &SensorPose::default(), 8);
        assert_eq!(cloud.len(), 8);
        for d in &cloud.detections {
            // Shell of a 4.5 x 1.8 box centered 22 m ahead.
            assert!(d.r > 19.0 && d.r < 25.0);
            assert_relative_eq!(d.doppler, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn behind_sensor_yields_nothing() {
        let target =
            ObjectState { id: 1, x: -22.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 4.5, width: 1.8 };
        let frame = frame_with_target(target);
        assert!(irm_detect(&frame, &SensorPose::default(), 8).is_empty());
    }

    #[test]
    fn closing_target_has_negative_doppler() {
        let target = ObjectState {
            id: 1,
            x: 30.0,
            y: 0.0,
            yaw: std::f64::consts::PI,
            speed: 6.0,
            length: 4.5,
            width: 1.8,
        };
        let frame = frame_with_target(target);
        let cloud = irm_detect(&frame, &SensorPose::default(), 8);
        assert!(!cloud.is_empty());
        for d in &cloud.detections {
            assert!(d.doppler < 0.0, "closing target must have negative doppler");
        }
    }

    #[test]
    fn deterministic_across_scenario() {
        let sc = build_scenario(ScenarioKind::EightS, &ScenarioParams::default(), 0.05, 30.0)
            .expect("scenario");
        let a: Vec<PointCloud> = sc.frames.iter().map(|f| irm_detect(f, &sc.sensor, 8)).collect();
        let b: Vec<PointCloud> = sc.frames.iter().map(|f| irm_detect(f, &sc.sensor, 8)).collect();
        assert_eq!(a, b);
        // The orbiting target stays in coverage for the whole figure, so
        // every frame carries the full ring.
        assert!(a.iter().all(|c| c.len() == 8));
    }
}
