//! Multi-object tracking over clustered detections.
//!
//! One fixed, fully deterministic pipeline: global-nearest-neighbor
//! association between predicted track positions and cluster centroids,
//! a constant-velocity Kalman filter per track, M-of-N confirmation,
//! deletion after L consecutive misses, and an exponentially smoothed
//! principal-axis bounding box as the shape estimate. The evaluation treats
//! all of this as a black box; every knob lives in [`PerceptionConfig`].

use super::clustering::{cluster, Cluster};
use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, Vec2};
use crate::metrics::assignment::{assign_min, FORBIDDEN};
use crate::scenario::Scenario;
use crate::sensor::PointCloud;
use serde::{Deserialize, Serialize};

/// Clustering and tracking parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    /// Clustering radius in the (x, y, scaled doppler) embedding (m).
    pub eps: f64,
    /// Minimum neighborhood size for a core point, itself included.
    pub min_pts: usize,
    /// Meters of embedding distance per m/s of doppler difference.
    pub doppler_scale: f64,
    /// Association gate between predicted position and centroid (m).
    pub gate: f64,
    /// Confirm after this many hits...
    pub confirm_hits: usize,
    /// ...within this many most recent frames.
    pub confirm_window: usize,
    /// Delete after this many consecutive misses.
    pub delete_after: usize,
    /// White-acceleration power spectral density of the motion model
    /// ((m/s^2)^2 per Hz).
    pub process_accel: f64,
    /// Measurement noise std dev on cluster centroids (m).
    pub meas_sigma: f64,
    /// Initial velocity uncertainty of a newborn track (m/s).
    pub init_speed_sigma: f64,
    /// Smoothing factor for box extent, yaw and offset; 1 = no smoothing.
    pub box_alpha: f64,
    /// Lower bound on estimated box extents (m).
    pub min_extent: f64,
}

impl Default for PerceptionConfig {
    fn default() -> PerceptionConfig {
        PerceptionConfig {
            eps: 2.0,
            min_pts: 2,
            doppler_scale: 1.0,
            gate: 3.0,
            confirm_hits: 2,
            confirm_window: 3,
            delete_after: 5,
            process_accel: 2.0,
            meas_sigma: 0.6,
            init_speed_sigma: 10.0,
            box_alpha: 0.3,
            min_extent: 0.3,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps", self.eps),
            ("gate", self.gate),
            ("process_accel", self.process_accel),
            ("meas_sigma", self.meas_sigma),
            ("init_speed_sigma", self.init_speed_sigma),
            ("min_extent", self.min_extent),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid_config(name, "must be positive and finite"));
            }
        }
        if !(self.doppler_scale >= 0.0) || !self.doppler_scale.is_finite() {
            return Err(Error::invalid_config("doppler_scale", "must be non-negative"));
        }
        if self.min_pts == 0 {
            return Err(Error::invalid_config("min_pts", "must be at least 1"));
        }
        if self.confirm_hits == 0 || self.confirm_hits > self.confirm_window {
            return Err(Error::invalid_config(
                "confirm_hits",
                "need 1 <= confirm_hits <= confirm_window",
            ));
        }
        if self.delete_after == 0 {
            return Err(Error::invalid_config("delete_after", "must be at least 1"));
        }
        if !(self.box_alpha > 0.0 && self.box_alpha <= 1.0) {
            return Err(Error::invalid_config("box_alpha", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// One confirmed track as handed to the evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackEstimate {
    pub track_id: u64,
    /// Filtered position (world frame, m).
    pub x: f64,
    pub y: f64,
    /// Filtered velocity (m/s).
    pub vx: f64,
    pub vy: f64,
    /// Smoothed oriented-box shape estimate.
    pub bbox: OrientedBox,
    /// Frames since birth, 1 on the birth frame.
    pub age: usize,
    pub confirmed: bool,
}

type M4 = [[f64; 4]; 4];

fn mat_mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn transpose(a: &M4) -> M4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

struct Track {
    id: u64,
    /// State [x, y, vx, vy].
    x: [f64; 4],
    p: M4,
    age: usize,
    consecutive_misses: usize,
    /// Hit/miss record, most recent last; bounded by the confirm window.
    history: Vec<bool>,
    confirmed: bool,
    // Shape state, exponentially smoothed.
    ext_major: f64,
    ext_minor: f64,
    /// Doubled-angle encoding of the box yaw; immune to the 180 degree
    /// ambiguity of a principal axis.
    yaw_cos2: f64,
    yaw_sin2: f64,
    /// Box center minus filtered position, so the box coasts with the
    /// filter through missed frames.
    center_offset: Vec2,
}

impl Track {
    fn predict(&mut self, dt: f64, accel_psd: f64) {
        let mut f = [[0.0; 4]; 4];
        for i in 0..4 {
            f[i][i] = 1.0;
        }
        f[0][2] = dt;
        f[1][3] = dt;
        let nx = [self.x[0] + dt * self.x[2], self.x[1] + dt * self.x[3], self.x[2], self.x[3]];
        self.x = nx;
        let mut q = [[0.0; 4]; 4];
        let (d2, d3, d4) = (dt * dt, dt * dt * dt, dt * dt * dt * dt);
        for axis in 0..2 {
            q[axis][axis] = accel_psd * d4 / 4.0;
            q[axis][axis + 2] = accel_psd * d3 / 2.0;
            q[axis + 2][axis] = accel_psd * d3 / 2.0;
            q[axis + 2][axis + 2] = accel_psd * d2;
        }
        let fp = mat_mul(&f, &self.p);
        let fpf = mat_mul(&fp, &transpose(&f));
        for i in 0..4 {
            for j in 0..4 {
                self.p[i][j] = fpf[i][j] + q[i][j];
            }
        }
    }

    fn update(&mut self, z: Vec2, meas_var: f64) {
        let innov = [z.x - self.x[0], z.y - self.x[1]];
        // S = H P H^T + R with H selecting the position block.
        let s = [[self.p[0][0] + meas_var, self.p[0][1]], [self.p[1][0], self.p[1][1] + meas_var]];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let si = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        // K = P H^T S^{-1}, a 4x2 gain.
        let mut k = [[0.0; 2]; 4];
        for i in 0..4 {
            for j in 0..2 {
                k[i][j] = self.p[i][0] * si[0][j] + self.p[i][1] * si[1][j];
            }
        }
        for i in 0..4 {
            self.x[i] += k[i][0] * innov[0] + k[i][1] * innov[1];
        }
        // P = (I - K H) P; H zeroes all but the first two columns of K.
        let mut ikh = [[0.0; 4]; 4];
        for i in 0..4 {
            ikh[i][i] = 1.0;
            ikh[i][0] -= k[i][0];
            ikh[i][1] -= k[i][1];
        }
        let np = mat_mul(&ikh, &self.p);
        for i in 0..4 {
            for j in 0..4 {
                self.p[i][j] = 0.5 * (np[i][j] + np[j][i]);
            }
        }
    }

    fn observe_shape(&mut self, c: &Cluster, alpha: f64, min_extent: f64, first: bool) {
        let (center, yaw, major, minor) = principal_box(&c.points, min_extent);
        let offset = center - Vec2::new(self.x[0], self.x[1]);
        let (s2, c2) = (2.0 * yaw).sin_cos();
        if first {
            self.ext_major = major;
            self.ext_minor = minor;
            self.yaw_cos2 = c2;
            self.yaw_sin2 = s2;
            self.center_offset = offset;
        } else {
            self.ext_major += alpha * (major - self.ext_major);
            self.ext_minor += alpha * (minor - self.ext_minor);
            self.yaw_cos2 += alpha * (c2 - self.yaw_cos2);
            self.yaw_sin2 += alpha * (s2 - self.yaw_sin2);
            self.center_offset = self.center_offset + (offset - self.center_offset) * alpha;
        }
    }

    fn estimate(&self) -> TrackEstimate {
        let yaw = 0.5 * self.yaw_sin2.atan2(self.yaw_cos2);
        let center = Vec2::new(self.x[0], self.x[1]) + self.center_offset;
        TrackEstimate {
            track_id: self.id,
            x: self.x[0],
            y: self.x[1],
            vx: self.x[2],
            vy: self.x[3],
            bbox: OrientedBox::new(center, yaw, self.ext_major, self.ext_minor),
            age: self.age,
            confirmed: self.confirmed,
        }
    }
}

/// Oriented bounding box of a point set along its principal axis. Returns
/// (center, yaw, major extent, minor extent), extents floored.
fn principal_box(points: &[Vec2], min_extent: f64) -> (Vec2, f64, f64, f64) {
    let n = points.len() as f64;
    let mut mean = Vec2::ZERO;
    for p in points {
        mean = mean + *p;
    }
    mean = mean * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let yaw = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let u = Vec2::from_angle(yaw);
    let v = Vec2::new(-u.y, u.x);
    let (mut ulo, mut uhi, mut vlo, mut vhi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let d = *p - mean;
        let (pu, pv) = (d.dot(u), d.dot(v));
        ulo = ulo.min(pu);
        uhi = uhi.max(pu);
        vlo = vlo.min(pv);
        vhi = vhi.max(pv);
    }
    let center = mean + u * (0.5 * (ulo + uhi)) + v * (0.5 * (vlo + vhi));
    ((center), yaw, (uhi - ulo).max(min_extent), (vhi - vlo).max(min_extent))
}

/// Tracker state folded over a frame sequence.
pub struct Tracker {
    cfg: PerceptionConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(cfg: PerceptionConfig) -> Tracker {
        Tracker { cfg, tracks: Vec::new(), next_id: 0 }
    }

    /// Advance one frame and return the confirmed tracks, sorted by id.
    pub fn step(&mut self, clusters: &[Cluster], dt: f64) -> Vec<TrackEstimate> {
        let cfg = self.cfg;
        for tr in &mut self.tracks {
            tr.age += 1;
            tr.predict(dt, cfg.process_accel);
        }
        // Global nearest neighbor on centroid distance.
        let nt = self.tracks.len();
        let nc = clusters.len();
        let mut cluster_hit = vec![false; nc];
        let mut track_hit = vec![false; nt];
        if nt > 0 && nc > 0 {
            let mut cost = vec![0.0; nt * nc];
            for (i, tr) in self.tracks.iter().enumerate() {
                let pred = Vec2::new(tr.x[0], tr.x[1]);
                for (j, cl) in clusters.iter().enumerate() {
                    let d = pred.dist(cl.centroid);
                    cost[i * nc + j] = if d <= cfg.gate { d } else { FORBIDDEN };
                }
            }
            let pairs = assign_min(&cost, nt, nc);
            for (i, j) in pairs {
                let tr = &mut self.tracks[i];
                tr.update(clusters[j].centroid, cfg.meas_sigma * cfg.meas_sigma);
                tr.observe_shape(&clusters[j], cfg.box_alpha, cfg.min_extent, false);
                tr.history.push(true);
                tr.consecutive_misses = 0;
                cluster_hit[j] = true;
                track_hit[i] = true;
            }
        }
        for (tr, &hit) in self.tracks.iter_mut().zip(&track_hit) {
            if !hit {
                tr.history.push(false);
                tr.consecutive_misses += 1;
            }
            if tr.history.len() > cfg.confirm_window {
                let drop = tr.history.len() - cfg.confirm_window;
                tr.history.drain(..drop);
            }
            if tr.history.iter().filter(|&&h| h).count() >= cfg.confirm_hits {
                tr.confirmed = true;
            }
        }
        self.tracks.retain(|t| t.consecutive_misses < cfg.delete_after);
        // Births: every cluster no track claimed.
        for (j, cl) in clusters.iter().enumerate() {
            if cluster_hit[j] {
                continue;
            }
            let mut p = [[0.0; 4]; 4];
            p[0][0] = cfg.meas_sigma * cfg.meas_sigma;
            p[1][1] = cfg.meas_sigma * cfg.meas_sigma;
            p[2][2] = cfg.init_speed_sigma * cfg.init_speed_sigma;
            p[3][3] = cfg.init_speed_sigma * cfg.init_speed_sigma;
            let mut tr = Track {
                id: self.next_id,
                x: [cl.centroid.x, cl.centroid.y, 0.0, 0.0],
                p,
                age: 1,
                consecutive_misses: 0,
                history: vec![true],
                confirmed: cfg.confirm_hits <= 1,
                ext_major: cfg.min_extent,
                ext_minor: cfg.min_extent,
                yaw_cos2: 1.0,
                yaw_sin2: 0.0,
                center_offset: Vec2::ZERO,
            };
            tr.observe_shape(cl, cfg.box_alpha, cfg.min_extent, true);
            self.next_id += 1;
            self.tracks.push(tr);
        }
        let mut out: Vec<TrackEstimate> =
            self.tracks.iter().filter(|t| t.confirmed).map(Track::estimate).collect();
        out.sort_by_key(|t| t.track_id);
        out
    }
}

/// Run clustering and tracking over a whole recording. `clouds` must be
/// frame-aligned with the scenario (same length, indices and timestamps).
pub fn run_perception(
    clouds: &[PointCloud],
    scenario: &Scenario,
    cfg: &PerceptionConfig,
) -> Result<Vec<Vec<TrackEstimate>>> {
    cfg.validate()?;
    if clouds.len() != scenario.frames.len() {
        return Err(Error::FrameMisalignment(format!(
            "{} clouds for {} frames",
            clouds.len(),
            scenario.frames.len()
        )));
    }
    let mut tracker = Tracker::new(*cfg);
    let mut out = Vec::with_capacity(clouds.len());
    for (cloud, frame) in clouds.iter().zip(&scenario.frames) {
        if cloud.frame_index != frame.index || (cloud.t - frame.t).abs() > 1e-9 {
            return Err(Error::FrameMisalignment(format!(
                "cloud {} at t={} against frame {} at t={}",
                cloud.frame_index, cloud.t, frame.index, frame.t
            )));
        }
        let ws = scenario.sensor.world(&frame.ego);
        let clusters = cluster(cloud, &ws, cfg.eps, cfg.min_pts, cfg.doppler_scale);
        out.push(tracker.step(&clusters, scenario.dt));
    }
    Ok(out)
}
