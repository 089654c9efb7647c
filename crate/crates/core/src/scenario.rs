//! Ground-truth scenario generation and sensor-frame transforms.
//!
//! A scenario is a fixed-rate sequence of frames, each holding the ego
//! state and the target states in the world frame. Eight built-in
//! categories cover single- and multi-target encounters: head-on approach,
//! overtakes, car following, a figure-eight in front of a static ego, a
//! crossing pair, and an occlusion case where one target hides the other.
//!
//! Trajectories are picked so the published speeds and headings are exact:
//! positions come from closed-form path functions, and each frame's speed
//! and yaw are set from the central finite difference of the sampled
//! positions. Everything here is deterministic; no random state is
//! involved.

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, segment_blocked, OrientedBox, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Shell sample count used by the visibility test.
pub const VISIBILITY_SAMPLES: usize = 32;

/// Kinematic state of one rectangular object in the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    /// Heading, normalized to (-pi, pi].
    pub yaw: f64,
    /// Scalar longitudinal speed along the heading (m/s, non-negative).
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

impl ObjectState {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.x, self.y, self.yaw, self.speed, self.length, self.width]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidArgument(format!("object {}: non-finite field", self.id)));
        }
        if self.length <= 0.0 || self.width <= 0.0 {
            return Err(Error::InvalidArgument(format!("object {}: non-positive extent", self.id)));
        }
        if !(-PI..=PI).contains(&self.yaw) || self.yaw == -PI {
            return Err(Error::InvalidArgument(format!("object {}: yaw not normalized", self.id)));
        }
        Ok(())
    }

    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Velocity vector implied by speed and heading.
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.yaw) * self.speed
    }

    pub fn footprint(&self) -> OrientedBox {
        OrientedBox::new(self.pos(), self.yaw, self.length, self.width)
    }
}

/// Radar mount relative to the ego reference point, plus coverage limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorPose {
    pub x: f64,
    pub y: f64,
    /// Boresight direction relative to the ego heading.
    pub yaw: f64,
    /// Half-angle of the azimuth coverage (rad).
    pub fov_azimuth: f64,
    /// Maximum measurement range (m).
    pub range_max: f64,
}

impl Default for SensorPose {
    fn default() -> Self {
        // Mounted at the ego reference point looking forward. A forward
        // bumper mount would push near-target shell points outside the
        // +-60 deg cone in the figure-eight scenario.
        SensorPose { x: 0.0, y: 0.0, yaw: 0.0, fov_azimuth: 60f64.to_radians(), range_max: 100.0 }
    }
}

impl SensorPose {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_azimuth > 0.0 && self.fov_azimuth <= PI) {
            return Err(Error::invalid_config("sensor.fov_azimuth", "must be in (0, pi]"));
        }
        if !(self.range_max > 0.0) {
            return Err(Error::invalid_config("sensor.range_max", "must be positive"));
        }
        if ![self.x, self.y, self.yaw, self.fov_azimuth, self.range_max]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid_config("sensor", "non-finite field"));
        }
        Ok(())
    }

    /// Sensor origin and boresight in the world frame for a given ego state.
    pub fn world(&self, ego: &ObjectState) -> WorldSensor {
        let offset = Vec2::new(self.x, self.y).rotated(ego.yaw);
        WorldSensor {
            position: ego.pos() + offset,
            boresight: normalize_angle(ego.yaw + self.yaw),
            fov_azimuth: self.fov_azimuth,
            range_max: self.range_max,
            velocity: ego.velocity(),
        }
    }
}

/// Sensor placed in the world: origin, boresight, coverage and the
/// velocity it inherits from the ego body.
#[derive(Clone, Copy, Debug)]
pub struct WorldSensor {
    pub position: Vec2,
    pub boresight: f64,
    pub fov_azimuth: f64,
    pub range_max: f64,
    pub velocity: Vec2,
}

impl WorldSensor {
    /// Polar coordinates of a world point in the sensor frame.
    pub fn to_polar(&self, p: Vec2) -> (f64, f64) {
        let rel = p - self.position;
        let r = rel.norm();
        if r < 1e-12 {
            return (0.0, 0.0);
        }
        (r, normalize_angle(rel.angle() - self.boresight))
    }

    /// World position of a sensor-frame polar coordinate.
    pub fn to_world(&self, r: f64, phi: f64) -> Vec2 {
        self.position + Vec2::from_angle(self.boresight + phi) * r
    }

    pub fn in_fov(&self, r: f64, phi: f64) -> bool {
        r > 0.0 && r <= self.range_max && phi.abs() <= self.fov_azimuth
    }

    /// Signed radial velocity of a world point moving with `v`.
    /// Negative while the point closes in on the sensor.
    pub fn radial_velocity(&self, p: Vec2, v: Vec2) -> f64 {
        let rel = p - self.position;
        let r = rel.norm();
        if r < 1e-12 {
            return 0.0;
        }
        rel.dot(v - self.velocity) / r
    }
}

/// One time step of ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub t: f64,
    pub ego: ObjectState,
    pub targets: Vec<ObjectState>,
}

/// The eight built-in scenario categories. `_s` suffixes are single-target,
/// `_m` are multi-target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    OncomingS,
    OvertakeS,
    LeadingS,
    EightS,
    OcclusionM,
    LeadingM,
    OvertakeM,
    CrossingM,
}

impl ScenarioKind {
    pub fn all() -> [ScenarioKind; 8] {
        use ScenarioKind::*;
        [OncomingS, OvertakeS, LeadingS, EightS, OcclusionM, LeadingM, OvertakeM, CrossingM]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::OncomingS => "oncoming_s",
            ScenarioKind::OvertakeS => "overtake_s",
            ScenarioKind::LeadingS => "leading_s",
            ScenarioKind::EightS => "eight_s",
            ScenarioKind::OcclusionM => "occlusion_m",
            ScenarioKind::LeadingM => "leading_m",
            ScenarioKind::OvertakeM => "overtake_m",
            ScenarioKind::CrossingM => "crossing_m",
        }
    }

    pub fn from_name(name: &str) -> Result<ScenarioKind> {
        ScenarioKind::all()
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown scenario name `{name}`")))
    }

    pub fn is_multi(&self) -> bool {
        matches!(
            self,
            ScenarioKind::OcclusionM
                | ScenarioKind::LeadingM
                | ScenarioKind::OvertakeM
                | ScenarioKind::CrossingM
        )
    }

    /// Duration used when a run config does not override it.
    pub fn default_duration(&self) -> f64 {
        match self {
            ScenarioKind::OncomingS => 7.0,
            ScenarioKind::OvertakeS => 20.0,
            ScenarioKind::LeadingS => 10.0,
            ScenarioKind::EightS => 30.0,
            ScenarioKind::OcclusionM => 20.0,
            ScenarioKind::LeadingM => 15.0,
            ScenarioKind::OvertakeM => 20.0,
            ScenarioKind::CrossingM => 10.0,
        }
    }
}

/// Tunable scenario parameters. `None` picks the per-category default,
/// which is documented in the builder for that category. All speeds are
/// m/s, offsets and ranges are meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub ego_speed: Option<f64>,
    pub target_speed: Option<f64>,
    pub second_target_speed: Option<f64>,
    /// Initial longitudinal offset of the (first) target relative to the
    /// ego; negative values start it behind.
    pub start_range: Option<f64>,
    /// Lateral lane offset of the (first) target.
    pub lane_offset: Option<f64>,
    /// Center-to-focus distance of the figure-eight path.
    pub lemniscate_focus: f64,
    /// Longitudinal distance from the ego to the figure-eight center.
    pub lemniscate_center: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    /// Extent of the occluding truck in `occlusion_m`.
    pub occluder_length: f64,
    pub occluder_width: f64,
    pub sensor: SensorPose,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            ego_speed: None,
            target_speed: None,
            second_target_speed: None,
            start_range: None,
            lane_offset: None,
            lemniscate_focus: 15.0,
            lemniscate_center: 25.0,
            vehicle_length: 4.5,
            vehicle_width: 1.8,
            occluder_length: 6.0,
            occluder_width: 2.5,
            sensor: SensorPose::default(),
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        for (name, v) in [
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
            ("occluder_length", self.occluder_length),
            ("occluder_width", self.occluder_width),
            ("lemniscate_focus", self.lemniscate_focus),
            ("lemniscate_center", self.lemniscate_center),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid_config(name, "must be positive and finite"));
            }
        }
        for (name, v) in [
            ("ego_speed", self.ego_speed),
            ("target_speed", self.target_speed),
            ("second_target_speed", self.second_target_speed),
            ("start_range", self.start_range),
            ("lane_offset", self.lane_offset),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::invalid_config(name, "must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// A full deterministic scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Instance label; equals `kind.name()` for the standard evaluation
    /// scenarios and carries a distinct tag for auxiliary runs such as
    /// model-training drives.
    pub label: String,
    pub dt: f64,
    pub sensor: SensorPose,
    pub frames: Vec<Frame>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.label
    }

    /// Same run under a different instance label. Random streams are keyed
    /// by label, so a relabeled scenario draws independent detections.
    pub fn with_label(mut self, label: impl Into<String>) -> Scenario {
        self.label = label.into();
        self
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.frames.len() as f64
    }
}

// --- builders -------------------------------------------------------------

/// One object's path: closed-form position over time plus the heading to
/// report while it is standing still.
struct Path {
    id: u32,
    length: f64,
    width: f64,
    pos: Box<dyn Fn(f64) -> Vec2>,
    rest_yaw: f64,
}

impl Path {
    fn line(id: u32, start: Vec2, vel: Vec2, length: f64, width: f64) -> Path {
        let rest_yaw = if vel.norm() > 0.0 { vel.angle() } else { 0.0 };
        Path { id, length, width, pos: Box::new(move |t| start + vel * t), rest_yaw }
    }
}

/// Build the ground-truth trajectory table for one scenario category.
///
/// Frame timestamps are `k * dt` for `k` in `0..round(duration/dt)`. The
/// per-frame speed and yaw of every object are the central finite
/// difference of its sampled positions (one-sided at the ends), so the
/// published kinematics and positions are mutually consistent by
/// construction.
pub fn build_scenario(
    kind: ScenarioKind,
    params: &ScenarioParams,
    dt: f64,
    duration: f64,
) -> Result<Scenario> {
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidScenario("dt must be positive".into()));
    }
    if !(duration.is_finite() && duration >= 10.0 * dt) {
        return Err(Error::InvalidScenario("duration must cover at least 10 frames".into()));
    }

    let p = params;
    let (l, w) = (p.vehicle_length, p.vehicle_width);
    let (ego_path, target_paths): (Path, Vec<Path>) = match kind {
        // Target starts far ahead in the adjacent lane and drives toward
        // the ego. Defaults: ego 5 m/s, target 8 m/s, start 98 m, lane 3.5.
        ScenarioKind::OncomingS => {
            let se = p.ego_speed.unwrap_or(5.0);
            let st = p.target_speed.unwrap_or(8.0);
            let x0 = p.start_range.unwrap_or(98.0);
            let y0 = p.lane_offset.unwrap_or(3.5);
            (
                Path::line(0, Vec2::ZERO, Vec2::new(se, 0.0), l, w),
                vec![Path::line(1, Vec2::new(x0, y0), Vec2::new(-st, 0.0), l, w)],
            )
        }
        // Faster target starts behind in the adjacent lane and pulls past.
        // Defaults: ego 10 m/s, target 14 m/s, start -5 m, lane 3.5.
        ScenarioKind::OvertakeS => {
            let se = p.ego_speed.unwrap_or(10.0);
            let st = p.target_speed.unwrap_or(14.0);
            let x0 = p.start_range.unwrap_or(-5.0);
            let y0 = p.lane_offset.unwrap_or(3.5);
            (
                Path::line(0, Vec2::ZERO, Vec2::new(se, 0.0), l, w),
                vec![Path::line(1, Vec2::new(x0, y0), Vec2::new(st, 0.0), l, w)],
            )
        }
        // Target leads in the same lane. Defaults: both 10 m/s, gap 22 m,
        // so the radial distance stays constant over the whole run.
        ScenarioKind::LeadingS => {
            let se = p.ego_speed.unwrap_or(10.0);
            let st = p.target_speed.unwrap_or(se);
            let x0 = p.start_range.unwrap_or(22.0);
            let y0 = p.lane_offset.unwrap_or(0.0);
            (
                Path::line(0, Vec2::ZERO, Vec2::new(se, 0.0), l, w),
                vec![Path::line(1, Vec2::new(x0, y0), Vec2::new(st, 0.0), l, w)],
            )
        }
        // Target drives a figure eight in front of a static ego, at
        // constant path speed (default 8 m/s). The path is a Bernoulli
        // lemniscate traversed by arc length.
        ScenarioKind::EightS => {
            let st = p.target_speed.unwrap_or(8.0);
            if !(st > 0.0) {
                return Err(Error::InvalidScenario("eight_s needs a positive target speed".into()));
            }
            let lut = LemniscateLut::new(p.lemniscate_focus, Vec2::new(p.lemniscate_center, 0.0));
            (
                Path::line(0, Vec2::ZERO, Vec2::ZERO, l, w),
                vec![Path {
                    id: 1,
                    length: l,
                    width: w,
                    pos: Box::new(move |t| lut.at(st * t)),
                    rest_yaw: FRAC_PI_2,
                }],
            )
        }
        // A truck crosses slowly at 20 m while a car crosses the other way
        // at 45 m; mid-run the truck's silhouette fully hides the car.
        // Defaults: truck 1.5 m/s upward from y=-6, car 1.2 m/s downward
        // from y=18.
        ScenarioKind::OcclusionM => {
            let s1 = p.target_speed.unwrap_or(1.5);
            let s2 = p.second_target_speed.unwrap_or(1.2);
            let x1 = p.start_range.unwrap_or(20.0);
            (
                Path::line(0, Vec2::ZERO, Vec2::ZERO, l, w),
                vec![
                    Path::line(
                        1,
                        Vec2::new(x1, -6.0),
                        Vec2::new(0.0, s1),
                        p.occluder_length,
                        p.occluder_width,
                    ),
                    Path::line(2, Vec2::new(45.0, 18.0), Vec2::new(0.0, -s2), l, w),
                ],
            )
        }
        // Two leading targets in adjacent lanes, same speed as the ego.
        ScenarioKind::LeadingM => {
            let se = p.ego_speed.unwrap_or(10.0);
            let s1 = p.target_speed.unwrap_or(se);
            let s2 = p.second_target_speed.unwrap_or(se);
            let off = p.lane_offset.unwrap_or(2.0);
            (
                Path::line(0, Vec2::ZERO, Vec2::new(se, 0.0), l, w),
                vec![
                    Path::line(1, Vec2::new(22.0, off), Vec2::new(s1, 0.0), l, w),
                    Path::line(2, Vec2::new(28.0, -off), Vec2::new(s2, 0.0), l, w),
                ],
            )
        }
        // Two faster targets overtake on both sides, staggered starts.
        ScenarioKind::OvertakeM => {
            let se = p.ego_speed.unwrap_or(8.0);
            let s1 = p.target_speed.unwrap_or(13.0);
            let s2 = p.second_target_speed.unwrap_or(13.5);
            let off = p.lane_offset.unwrap_or(3.5);
            (
                Path::line(0, Vec2::ZERO, Vec2::new(se, 0.0), l, w),
                vec![
                    Path::line(1, Vec2::new(-8.0, off), Vec2::new(s1, 0.0), l, w),
                    Path::line(2, Vec2::new(-18.0, -off), Vec2::new(s2, 0.0), l, w),
                ],
            )
        }
        // Two targets cross laterally in front of a static ego.
        ScenarioKind::CrossingM => {
            let s1 = p.target_speed.unwrap_or(5.0);
            let s2 = p.second_target_speed.unwrap_or(5.0);
            (
                Path::line(0, Vec2::ZERO, Vec2::ZERO, l, w),
                vec![
                    Path::line(1, Vec2::new(25.0, -20.0), Vec2::new(0.0, s1), l, w),
                    Path::line(2, Vec2::new(35.0, 25.0), Vec2::new(0.0, -s2), l, w),
                ],
            )
        }
    };

    let frame_count = (duration / dt).round() as usize;
    let frames = sample_paths(&ego_path, &target_paths, dt, frame_count);

    let scenario = Scenario { kind, label: kind.name().to_string(), dt, sensor: p.sensor, frames };

    // A scenario where no target center ever enters the coverage cone is a
    // parameterization mistake, not a valid (if boring) run.
    let any_visible = scenario.frames.iter().any(|f| {
        let ws = scenario.sensor.world(&f.ego);
        f.targets.iter().any(|t| {
            let (r, phi) = ws.to_polar(t.pos());
            ws.in_fov(r, phi)
        })
    });
    if !any_visible {
        return Err(Error::InvalidScenario(format!(
            "{}: no target ever enters the field of view",
            kind.name()
        )));
    }
    Ok(scenario)
}

/// Sample positions at every frame time and derive speed and yaw from the
/// central finite difference (one-sided at the first/last frame).
fn sample_paths(ego: &Path, targets: &[Path], dt: f64, frame_count: usize) -> Vec<Frame> {
    let states_of = |path: &Path| -> Vec<ObjectState> {
        let positions: Vec<Vec2> = (0..frame_count).map(|k| (path.pos)(k as f64 * dt)).collect();
        (0..frame_count)
            .map(|k| {
                let v = if frame_count == 1 {
                    Vec2::ZERO
                } else if k == 0 {
                    (positions[1] - positions[0]) * (1.0 / dt)
                } else if k == frame_count - 1 {
                    (positions[k] - positions[k - 1]) * (1.0 / dt)
                } else {
                    (positions[k + 1] - positions[k - 1]) * (1.0 / (2.0 * dt))
                };
                let speed = v.norm();
                let yaw = if speed > 1e-9 { normalize_angle(v.angle()) } else { path.rest_yaw };
                ObjectState {
                    id: path.id,
                    x: positions[k].x,
                    y: positions[k].y,
                    yaw,
                    speed,
                    length: path.length,
                    width: path.width,
                }
            })
            .collect()
    };

    let ego_states = states_of(ego);
    let target_states: Vec<Vec<ObjectState>> = targets.iter().map(states_of).collect();
    (0..frame_count)
        .map(|k| Frame {
            index: k,
            t: k as f64 * dt,
            ego: ego_states[k],
            targets: target_states.iter().map(|ts| ts[k]).collect(),
        })
        .collect()
}

/// Arc-length lookup table for a Bernoulli lemniscate, so the figure-eight
/// target moves at constant path speed.
struct LemniscateLut {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
    total: f64,
}

impl LemniscateLut {
    fn new(focus: f64, center: Vec2) -> LemniscateLut {
        // Half-width a of r^2 = a^2 cos(2 theta); foci sit at +-a/sqrt(2).
        let a = focus * std::f64::consts::SQRT_2;
        let n = 8192;
        let mut points = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let th = 2.0 * PI * i as f64 / n as f64;
            let s2 = 1.0 + th.sin() * th.sin();
            points.push(center + Vec2::new(a * th.cos() / s2, a * th.sin() * th.cos() / s2));
        }
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..=n {
            acc += points[i].dist(points[i - 1]);
            cumulative.push(acc);
        }
        LemniscateLut { points, cumulative, total: acc }
    }

    fn at(&self, arc: f64) -> Vec2 {
        let s = arc.rem_euclid(self.total);
        let i = match self.cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if i + 1 >= self.points.len() {
            return self.points[self.points.len() - 1];
        }
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let f = if seg > 0.0 { (s - self.cumulative[i]) / seg } else { 0.0 };
        self.points[i] + (self.points[i + 1] - self.points[i]) * f
    }
}

// --- sensor-frame transform and visibility ---------------------------------

/// Observation of one object's reference point in the sensor frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorObs {
    /// Distance from the sensor origin to the object reference point (m).
    pub range: f64,
    /// Bearing from boresight, positive counter-clockwise (rad).
    pub azimuth: f64,
    /// Line-of-sight velocity; negative while closing in (m/s).
    pub radial_velocity: f64,
    /// Object heading relative to the boresight (rad).
    pub relative_yaw: f64,
}

/// Transform an object state into the sensor frame of an ego-mounted radar.
///
/// The object reference point is the rectangle center. The sensor inherits
/// the ego's velocity; rotational lever-arm terms are ignored (ego paths
/// here are straight, so the simplification is exact).
pub fn to_sensor_frame(state: &ObjectState, ego: &ObjectState, sensor: &SensorPose) -> SensorObs {
    let ws = sensor.world(ego);
    let (range, azimuth) = ws.to_polar(state.pos());
    SensorObs {
        range,
        azimuth,
        radial_velocity: ws.radial_velocity(state.pos(), state.velocity()),
        relative_yaw: normalize_angle(state.yaw - ws.boresight),
    }
}

/// Fraction of the target's shell that the sensor can see.
///
/// The shell is sampled at [`VISIBILITY_SAMPLES`] points; a sample counts
/// as visible when it lies inside the coverage cone and the straight
/// segment to the sensor origin crosses no other object's rectangle. The
/// target's own body never occludes its shell.
pub fn visibility(
    target: &ObjectState,
    others: &[ObjectState],
    ego: &ObjectState,
    sensor: &SensorPose,
) -> f64 {
    let ws = sensor.world(ego);
    let shell = target.footprint().shell_points(VISIBILITY_SAMPLES);
    let mut seen = 0usize;
    for p in &shell {
        let (r, phi) = ws.to_polar(*p);
        if !ws.in_fov(r, phi) {
            continue;
        }
        let blocked = others
            .iter()
            .filter(|o| o.id != target.id)
            .any(|o| segment_blocked(ws.position, *p, &o.footprint()));
        if !blocked {
            seen += 1;
        }
    }
    seen as f64 / shell.len() as f64
}

/// Visibility of target `idx` within a frame, occluded by its co-targets.
pub fn frame_visibility(frame: &Frame, idx: usize, sensor: &SensorPose) -> f64 {
    let target = &frame.targets[idx];
    let others: Vec<ObjectState> =
        frame.targets.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, o)| *o).collect();
    visibility(target, &others, &frame.ego, sensor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn static_obj(id: u32, x: f64, y: f64, yaw: f64) -> ObjectState {
        ObjectState { id, x, y, yaw, speed: 0.0, length: 4.5, width: 1.8 }
    }

    #[test]
    fn frame_count_law() {
        for kind in ScenarioKind::all() {
            let dur = kind.default_duration();
            let s = build_scenario(kind, &ScenarioParams::default(), 0.05, dur).unwrap();
            assert_eq!(s.frames.len(), (dur / 0.05).round() as usize, "{}", kind.name());
            for (k, f) in s.frames.iter().enumerate() {
                assert_eq!(f.index, k);
                assert_relative_eq!(f.t, k as f64 * 0.05, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eight_s_static_ego_600_frames() {
        let s =
            build_scenario(ScenarioKind::EightS, &ScenarioParams::default(), 0.05, 30.0).unwrap();
        assert_eq!(s.frames.len(), 600);
        for f in &s.frames {
            assert_eq!(f.ego.speed, 0.0);
            assert_eq!(f.targets.len(), 1);
        }
        // The target actually travels the figure eight: it revisits both
        // sides of the x-axis several times.
        let sign_changes = s
            .frames
            .windows(2)
            .filter(|w| w[0].targets[0].y.signum() != w[1].targets[0].y.signum())
            .count();
        assert!(sign_changes >= 4, "only {sign_changes} axis crossings");
    }

    #[test]
    fn eight_s_constant_path_speed() {
        let s =
            build_scenario(ScenarioKind::EightS, &ScenarioParams::default(), 0.05, 30.0).unwrap();
        for f in &s.frames {
            assert_relative_eq!(f.targets[0].speed, 8.0, epsilon = 0.02);
        }
    }

    #[test]
    fn leading_s_constant_radial_distance() {
        let s =
            build_scenario(ScenarioKind::LeadingS, &ScenarioParams::default(), 0.05, 10.0).unwrap();
        for f in &s.frames {
            let obs = to_sensor_frame(&f.targets[0], &f.ego, &s.sensor);
            assert!((obs.range - 22.0).abs() <= 1e-9, "range {} at frame {}", obs.range, f.index);
        }
    }

    #[test]
    fn kinematic_consistency_all_kinds() {
        for kind in ScenarioKind::all() {
            let s = build_scenario(kind, &ScenarioParams::default(), 0.05, kind.default_duration())
                .unwrap();
            let objects = |f: &Frame| {
                let mut v = vec![f.ego];
                v.extend(f.targets.iter().copied());
                v
            };
            for k in 1..s.frames.len() - 1 {
                let prev = objects(&s.frames[k - 1]);
                let cur = objects(&s.frames[k]);
                let next = objects(&s.frames[k + 1]);
                for (j, obj) in cur.iter().enumerate() {
                    let fd = (next[j].pos() - prev[j].pos()) * (1.0 / (2.0 * s.dt));
                    let stated = obj.velocity();
                    assert!(
                        (fd - stated).norm() < 1e-6,
                        "{} frame {k} object {j}: fd {fd:?} vs {stated:?}",
                        kind.name()
                    );
                }
            }
        }
    }

    #[test]
    fn determinism_bitwise() {
        for kind in [ScenarioKind::EightS, ScenarioKind::OcclusionM] {
            let a = build_scenario(kind, &ScenarioParams::default(), 0.05, 12.0).unwrap();
            let b = build_scenario(kind, &ScenarioParams::default(), 0.05, 12.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let p = ScenarioParams::default();
        assert!(build_scenario(ScenarioKind::EightS, &p, 0.0, 10.0).is_err());
        assert!(build_scenario(ScenarioKind::EightS, &p, 0.05, 0.2).is_err());
        let mut bad = ScenarioParams::default();
        bad.vehicle_length = -1.0;
        assert!(build_scenario(ScenarioKind::EightS, &bad, 0.05, 30.0).is_err());
        // Target parked far behind the ego never enters the cone.
        let mut never = ScenarioParams::default();
        never.start_range = Some(-500.0);
        never.target_speed = Some(0.0);
        never.ego_speed = Some(0.0);
        assert!(matches!(
            build_scenario(ScenarioKind::LeadingS, &never, 0.05, 5.0),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn sensor_frame_basics() {
        let sensor = SensorPose::default();
        let ego = static_obj(0, 0.0, 0.0, 0.0);
        let ahead = static_obj(1, 10.0, 0.0, 0.0);
        let obs = to_sensor_frame(&ahead, &ego, &sensor);
        assert_relative_eq!(obs.range, 10.0);
        assert_relative_eq!(obs.azimuth, 0.0);
        assert_relative_eq!(obs.radial_velocity, 0.0);

        let side = static_obj(2, 0.0, 5.0, 0.0);
        let obs = to_sensor_frame(&side, &ego, &sensor);
        assert_relative_eq!(obs.azimuth, FRAC_PI_2);
        assert_relative_eq!(obs.range, 5.0);
    }

    #[test]
    fn head_on_closing_speed_matches_range_rate() {
        let sensor = SensorPose::default();
        let dt = 0.05;
        let ego = static_obj(0, 0.0, 0.0, 0.0);
        let at = |t: f64| ObjectState {
            id: 1,
            x: 20.0 - 5.0 * t,
            y: 0.0,
            yaw: PI,
            speed: 5.0,
            length: 4.5,
            width: 1.8,
        };
        let obs = to_sensor_frame(&at(dt), &ego, &sensor);
        assert_relative_eq!(obs.radial_velocity, -5.0, epsilon = 1e-12);
        let r0 = to_sensor_frame(&at(0.0), &ego, &sensor).range;
        let r2 = to_sensor_frame(&at(2.0 * dt), &ego, &sensor).range;
        let fd = (r2 - r0) / (2.0 * dt);
        assert!((obs.radial_velocity - fd).abs() <= 1e-6 * dt);
    }

    #[test]
    fn visibility_plain_cases() {
        let sensor = SensorPose::default();
        let ego = static_obj(0, 0.0, 0.0, 0.0);
        let ahead = static_obj(1, 20.0, 0.0, 0.0);
        assert_eq!(visibility(&ahead, &[], &ego, &sensor), 1.0);
        let behind = static_obj(1, -20.0, 0.0, 0.0);
        assert_eq!(visibility(&behind, &[], &ego, &sensor), 0.0);
        // Narrow target exactly behind a wide one on the same ray.
        let small =
            ObjectState { id: 2, x: 40.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 1.0, width: 0.8 };
        let wide = ObjectState {
            id: 1,
            x: 20.0,
            y: 0.0,
            yaw: FRAC_PI_2,
            speed: 0.0,
            length: 12.0,
            width: 2.5,
        };
        assert_eq!(visibility(&small, &[wide], &ego, &sensor), 0.0);
        assert!(visibility(&wide, &[small], &ego, &sensor) > 0.5);
    }

    /// Brute-force occlusion oracle: finer shell sampling, direct
    /// segment-rectangle intersection, written independently of
    /// `visibility`'s internals.
    fn oracle_fully_occluded(
        target: &ObjectState,
        others: &[ObjectState],
        ws: &WorldSensor,
    ) -> bool {
        let shell = target.footprint().shell_points(128);
        shell.iter().all(|p| {
            let (r, phi) = ws.to_polar(*p);
            if !(r > 0.0 && r <= ws.range_max && phi.abs() <= ws.fov_azimuth) {
                return true; // outside coverage counts as not visible
            }
            others.iter().any(|o| {
                // Dense sampling along the sight line.
                let steps = 400;
                (1..steps).any(|i| {
                    let q = ws.position + (*p - ws.position) * (i as f64 / steps as f64);
                    let local = (q - o.pos()).rotated(-o.yaw);
                    local.x.abs() < o.length * 0.5 && local.y.abs() < o.width * 0.5
                })
            })
        })
    }

    #[test]
    fn occlusion_m_has_full_occlusion_window() {
        let s = build_scenario(ScenarioKind::OcclusionM, &ScenarioParams::default(), 0.05, 20.0)
            .unwrap();
        let mut exactly_one_hidden = 0usize;
        for f in &s.frames {
            let ws = s.sensor.world(&f.ego);
            let hidden: Vec<bool> =
                (0..f.targets.len()).map(|i| frame_visibility(f, i, &s.sensor) == 0.0).collect();
            if hidden.iter().filter(|h| **h).count() == 1 {
                exactly_one_hidden += 1;
                let idx = hidden.iter().position(|h| *h).unwrap();
                let others: Vec<ObjectState> = f
                    .targets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(_, o)| *o)
                    .collect();
                assert!(
                    oracle_fully_occluded(&f.targets[idx], &others, &ws),
                    "frame {}: visibility 0 but oracle disagrees",
                    f.index
                );
            }
        }
        // The crossing geometry yields a sustained full-occlusion window.
        assert!(
            exactly_one_hidden >= 10,
            "only {exactly_one_hidden} frames with exactly one hidden target"
        );
    }

    #[test]
    fn multi_scenarios_have_two_targets_with_stable_ids() {
        for kind in ScenarioKind::all() {
            let s = build_scenario(kind, &ScenarioParams::default(), 0.05, kind.default_duration())
                .unwrap();
            let expect = if kind.is_multi() { 2 } else { 1 };
            let ids: Vec<u32> = s.frames[0].targets.iter().map(|t| t.id).collect();
            assert_eq!(ids.len(), expect, "{}", kind.name());
            for f in &s.frames {
                assert_eq!(f.targets.iter().map(|t| t.id).collect::<Vec<_>>(), ids);
                f.ego.validate().unwrap();
                for t in &f.targets {
                    t.validate().unwrap();
                }
            }
        }
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Growing an occluder never reveals more of the target behind it.
        #[test]
        fn widening_occluder_never_increases_visibility(
            w1 in 0.5f64..6.0,
            grow in 0.0f64..4.0,
            y0 in -2.0f64..2.0,
        ) {
            let sensor = SensorPose::default();
            let ego = ObjectState { id: 0, x: 0.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 4.5, width: 1.8 };
            let target = ObjectState { id: 1, x: 30.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 4.5, width: 1.8 };
            let occluder = |w: f64| ObjectState {
                id: 2, x: 15.0, y: y0, yaw: FRAC_PI_2, speed: 0.0, length: w, width: 1.0,
            };
            let narrow = visibility(&target, &[occluder(w1)], &ego, &sensor);
            let wide = visibility(&target, &[occluder(w1 + grow)], &ego, &sensor);
            prop_assert!(wide <= narrow + 1e-12);
        }

        /// Bearing symmetry: mirroring the world across the boresight flips
        /// the azimuth sign and keeps range.
        #[test]
        fn mirrored_observation(x in 5.0f64..80.0, y in -30.0f64..30.0, v in -10.0f64..10.0) {
            let sensor = SensorPose::default();
            let ego = ObjectState { id: 0, x: 0.0, y: 0.0, yaw: 0.0, speed: 0.0, length: 4.5, width: 1.8 };
            let mk = |y: f64, vy: f64| {
                let vel = Vec2::new(-3.0, vy);
                ObjectState {
                    id: 1, x, y,
                    yaw: normalize_angle(vel.angle()),
                    speed: vel.norm(),
                    length: 4.5, width: 1.8,
                }
            };
            let a = to_sensor_frame(&mk(y, v), &ego, &sensor);
            let b = to_sensor_frame(&mk(-y, -v), &ego, &sensor);
            prop_assert!((a.range - b.range).abs() < 1e-9);
            prop_assert!((a.azimuth + b.azimuth).abs() < 1e-9);
            prop_assert!((a.radial_velocity - b.radial_velocity).abs() < 1e-9);
        }
    }
}
