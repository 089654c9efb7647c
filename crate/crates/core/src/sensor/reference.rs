//! Reference sensor: the stand-in for real radar recordings.
//!
//! Measured data is emulated by running a deliberately stronger ray tracer
//! (finer ray fan, more transmit power than the evaluated ray-tracing
//! model) and degrading its output the way hardware does: additive Gaussian
//! noise on range, azimuth and doppler, random dropouts, and uniform
//! clutter over the coverage sector.
//!
//! Draw order per frame is fixed: the ray-tracer draws first, then per base
//! detection three normals plus one dropout uniform (always consumed, even
//! when a parameter is zero), then the clutter count and three uniforms per
//! clutter point. That makes output a pure function of (frame, params,
//! seed) and keeps the zero-noise configuration bit-identical to the bare
//! ray tracer on the same seed.

use super::rtm::{rtm_detect, RtmParams};
use super::{Detection, PointCloud};
use crate::error::{Error, Result};
use crate::scenario::{Frame, SensorPose};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Degradation applied on top of the strong ray tracer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Range noise std dev (m).
    pub sigma_r: f64,
    /// Azimuth noise std dev (rad).
    pub sigma_phi: f64,
    /// Doppler noise std dev (m/s).
    pub sigma_doppler: f64,
    /// Probability of losing each detection.
    pub dropout: f64,
    /// Mean clutter points per frame (Poisson).
    pub clutter_rate: f64,
    /// Clutter doppler is uniform on +-this bound (m/s).
    pub clutter_doppler_max: f64,
}

impl Default for NoiseParams {
    fn default() -> NoiseParams {
        NoiseParams {
            sigma_r: 0.15,
            sigma_phi: 0.5_f64.to_radians(),
            sigma_doppler: 0.1,
            dropout: 0.1,
            clutter_rate: 1.0,
            clutter_doppler_max: 5.0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_r", self.sigma_r),
            ("sigma_phi", self.sigma_phi),
            ("sigma_doppler", self.sigma_doppler),
            ("clutter_rate", self.clutter_rate),
            ("clutter_doppler_max", self.clutter_doppler_max),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid_config(name, "must be finite and non-negative"));
            }
        }
        if !self.dropout.is_finite() || !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid_config("dropout", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Full reference configuration: a strong ray tracer plus degradation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceParams {
    pub rtm: RtmParams,
    pub noise: NoiseParams,
}

impl Default for ReferenceParams {
    fn default() -> ReferenceParams {
        ReferenceParams {
            rtm: RtmParams { ray_count: 181, tx_power_term: 5.0, ..RtmParams::default() },
            noise: NoiseParams::default(),
        }
    }
}

impl ReferenceParams {
    pub fn validate(&self) -> Result<()> {
        self.rtm.validate()?;
        self.noise.validate()
    }
}

/// Generate the reference cloud for one frame.
pub fn reference_detect(
    frame: &Frame,
    sensor: &SensorPose,
    params: &ReferenceParams,
    rng: &mut impl Rng,
) -> PointCloud {
    let base = rtm_detect(frame, sensor, &params.rtm, rng);
    let ws = sensor.world(&frame.ego);
    let np = &params.noise;
    let mut detections: Vec<Detection> = Vec::with_capacity(base.len());
    for d in &base.detections {
        // All four draws happen unconditionally to keep the stream aligned
        // across parameter settings.
        let zr: f64 = rng.sample(StandardNormal);
        let zp: f64 = rng.sample(StandardNormal);
        let zd: f64 = rng.sample(StandardNormal);
        let u_drop: f64 = rng.random();
        if u_drop < np.dropout {
            continue;
        }
        let r = d.r + np.sigma_r * zr;
        let phi = d.phi + np.sigma_phi * zp;
        if r <= 0.0 || r > ws.range_max || phi.abs() > ws.fov_azimuth {
            continue; // perturbed out of coverage
        }
        detections.push(Detection { r, phi, doppler: d.doppler + np.sigma_doppler * zd });
    }
    if np.clutter_rate > 0.0 {
        let poisson = Poisson::new(np.clutter_rate).expect("validated rate");
        let count = poisson.sample(rng) as usize;
        for _ in 0..count {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let u3: f64 = rng.random();
            // sqrt gives an area-uniform radius over the sector.
            let r = (ws.range_max * u1.sqrt()).max(1e-3);
            detections.push(Detection {
                r,
                phi: ws.fov_azimuth * (2.0 * u2 - 1.0),
                doppler: np.clutter_doppler_max * (2.0 * u3 - 1.0),
            });
        }
    }
    PointCloud { frame_index: frame.index, t: frame.t, detections }
}
