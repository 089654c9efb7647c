//! Data-driven radar model.
//!
//! Learns where detections land on a vehicle from reference recordings and
//! replays that distribution. Two conditional pieces are fitted:
//!
//! * per aspect-angle bin, a full-covariance Gaussian mixture over
//!   (body-frame offset x, offset y, doppler residual), component count
//!   chosen by BIC;
//! * per range bin, the empirical distribution of detection counts.
//!
//! Bins that saw no training data inherit the nearest populated bin
//! (circular distance for aspect, linear for range, ties to the lower
//! index). Fitting is fully deterministic: initialization is a
//! farthest-point sweep, not a random restart, so the same training set
//! always yields the same model.

use super::{Detection, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Vec2};
use crate::scenario::{frame_visibility, Frame, ObjectState, SensorPose};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One target as the sensor sees it: polar pose, body-frame heading,
/// relative velocity expressed in sensor axes, and extent.
#[derive(Clone, Copy, Debug)]
pub struct TargetInSensorFrame {
    pub range: f64,
    pub azimuth: f64,
    /// Target heading minus sensor boresight.
    pub relative_yaw: f64,
    /// Target velocity minus sensor velocity, rotated into sensor axes.
    pub rel_velocity: Vec2,
    pub length: f64,
    pub width: f64,
}

impl TargetInSensorFrame {
    pub fn from_states(
        target: &ObjectState,
        ego: &ObjectState,
        sensor: &SensorPose,
    ) -> TargetInSensorFrame {
        let ws = sensor.world(ego);
        let (range, azimuth) = ws.to_polar(target.pos());
        TargetInSensorFrame {
            range,
            azimuth,
            relative_yaw: normalize_angle(target.yaw - ws.boresight),
            rel_velocity: (target.velocity() - ws.velocity).rotated(-ws.boresight),
            length: target.length,
            width: target.width,
        }
    }

    /// Target center in sensor-frame Cartesian coordinates.
    pub fn center(&self) -> Vec2 {
        Vec2::from_angle(self.azimuth) * self.range
    }

    /// Direction the sensor looks at the target from, in the target's body
    /// frame. Pi means the sensor stares at the rear.
    pub fn aspect(&self) -> f64 {
        normalize_angle(self.azimuth + std::f64::consts::PI - self.relative_yaw)
    }

    /// Doppler a rigid-body point at sensor-frame position `p` would show.
    pub fn expected_doppler_at(&self, p: Vec2) -> f64 {
        let r = p.norm();
        if r < 1e-12 {
            return 0.0;
        }
        p.dot(self.rel_velocity) / r
    }

    /// Distance from sensor-frame point `p` to the target rectangle.
    fn shell_distance(&self, p: Vec2) -> f64 {
        let body = (p - self.center()).rotated(-self.relative_yaw);
        let dx = (body.x.abs() - 0.5 * self.length).max(0.0);
        let dy = (body.y.abs() - 0.5 * self.width).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Fitting and sampling knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdmConfig {
    /// Aspect-angle bins over (-pi, pi].
    pub aspect_bins: usize,
    /// Count-distribution support is {0, ..., k_max}.
    pub k_max: usize,
    pub range_bin_width: f64,
    /// Range bins partition (0, range_max].
    pub range_max: f64,
    /// BIC searches component counts 1..=max_components.
    pub max_components: usize,
    pub em_iterations: usize,
    /// Added to covariance diagonals that fail to factorize.
    pub covariance_floor: f64,
    /// Detections farther than this from the target shell are not
    /// attributed to it during training.
    pub train_gate: f64,
}

impl Default for DdmConfig {
    fn default() -> DdmConfig {
        DdmConfig {
            aspect_bins: 8,
            k_max: 40,
            range_bin_width: 10.0,
            range_max: 100.0,
            max_components: 5,
            em_iterations: 200,
            covariance_floor: 1e-6,
            train_gate: 3.0,
        }
    }
}

impl DdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.aspect_bins == 0 {
            return Err(Error::invalid_config("aspect_bins", "need at least one bin"));
        }
        if self.k_max == 0 {
            return Err(Error::invalid_config("k_max", "need k_max >= 1"));
        }
        if !(self.range_bin_width > 0.0) || !(self.range_max > 0.0) {
            return Err(Error::invalid_config("range_bin_width", "bins need positive extent"));
        }
        if self.max_components == 0 || self.max_components > 16 {
            return Err(Error::invalid_config("max_components", "must lie in 1..=16"));
        }
        if self.em_iterations == 0 {
            return Err(Error::invalid_config("em_iterations", "need at least one iteration"));
        }
        if !(self.covariance_floor > 0.0) {
            return Err(Error::invalid_config("covariance_floor", "must be positive"));
        }
        if !(self.train_gate > 0.0) {
            return Err(Error::invalid_config("train_gate", "must be positive"));
        }
        Ok(())
    }

    fn range_bins(&self) -> usize {
        (self.range_max / self.range_bin_width).ceil().max(1.0) as usize
    }

    fn aspect_bin(&self, aspect: f64) -> usize {
        let w = 2.0 * std::f64::consts::PI / self.aspect_bins as f64;
        (((aspect + std::f64::consts::PI) / w) as usize).min(self.aspect_bins - 1)
    }

    fn range_bin(&self, range: f64) -> usize {
        ((range / self.range_bin_width) as usize).min(self.range_bins() - 1)
    }
}

/// One mixture component with its Cholesky factor cached for sampling and
/// density evaluation.
#[derive(Clone, Debug)]
pub struct Gaussian3 {
    pub mean: [f64; 3],
    pub cov: [[f64; 3]; 3],
    chol: [[f64; 3]; 3],
}

impl Gaussian3 {
    /// Build a component, inflating the diagonal until the covariance
    /// factorizes. The returned covariance is the one actually used.
    pub fn new(mean: [f64; 3], mut cov: [[f64; 3]; 3], floor: f64) -> Gaussian3 {
        let mut boost = floor;
        for _ in 0..12 {
            if let Some(chol) = cholesky3(&cov) {
                return Gaussian3 { mean, cov, chol };
            }
            for d in 0..3 {
                cov[d][d] += boost;
            }
            boost *= 10.0;
        }
        // Diagonal growth makes factorization certain long before this.
        unreachable!("covariance flooring failed to produce an SPD matrix")
    }

    pub fn logpdf(&self, x: &[f64; 3]) -> f64 {
        let d = [x[0] - self.mean[0], x[1] - self.mean[1], x[2] - self.mean[2]];
        let y = forward_solve(&self.chol, &d);
        let quad = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let log_det_l = self.chol[0][0].ln() + self.chol[1][1].ln() + self.chol[2][2].ln();
        -0.5 * quad - 1.5 * (2.0 * std::f64::consts::PI).ln() - log_det_l
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 3] {
        let z: [f64; 3] =
            [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let mut out = self.mean;
        for i in 0..3 {
            for j in 0..=i {
                out[i] += self.chol[i][j] * z[j];
            }
        }
        out
    }
}

/// Gaussian mixture over (offset x, offset y, doppler residual).
#[derive(Clone, Debug)]
pub struct Mixture3 {
    pub weights: Vec<f64>,
    pub components: Vec<Gaussian3>,
}

impl Mixture3 {
    pub fn mean(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (w, c) in self.weights.iter().zip(&self.components) {
            for d in 0..3 {
                m[d] += w * c.mean[d];
            }
        }
        m
    }

    /// Overall covariance by the law of total variance.
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let m = self.mean();
        let mut cov = [[0.0; 3]; 3];
        for (w, c) in self.weights.iter().zip(&self.components) {
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += w * (c.cov[i][j] + (c.mean[i] - m[i]) * (c.mean[j] - m[j]));
                }
            }
        }
        cov
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 3] {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (j, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = j;
                break;
            }
        }
        self.components[pick].sample(rng)
    }

    fn loglik(&self, samples: &[[f64; 3]]) -> f64 {
        samples.iter().map(|x| self.log_density(x)).sum()
    }

    fn log_density(&self, x: &[f64; 3]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, c)| w.ln() + c.logpdf(x))
            .collect();
        log_sum_exp(&terms)
    }
}

/// The learned model: one mixture per aspect bin, one count distribution
/// per range bin. Every bin is populated (directly or by inheritance).
#[derive(Clone, Debug)]
pub struct DdmModel {
    pub config: DdmConfig,
    pub mixtures: Vec<Mixture3>,
    /// `count_dists[b][k]` = probability of k detections in range bin b.
    pub count_dists: Vec<Vec<f64>>,
}

impl DdmModel {
    /// Check the structural invariants: every distribution normalized,
    /// every covariance factorizable.
    pub fn validate(&self) -> Result<()> {
        if self.mixtures.len() != self.config.aspect_bins
            || self.count_dists.len() != self.config.range_bins()
        {
            return Err(Error::InvalidArgument("model bin layout inconsistent".into()));
        }
        for mix in &self.mixtures {
            let s: f64 = mix.weights.iter().sum();
            if (s - 1.0).abs() > 1e-9 || mix.weights.len() != mix.components.len() {
                return Err(Error::InvalidArgument("mixture weights must sum to 1".into()));
            }
        }
        for dist in &self.count_dists {
            if dist.len() != self.config.k_max + 1 {
                return Err(Error::InvalidArgument("count support must be 0..=k_max".into()));
            }
            let s: f64 = dist.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument("count distribution must sum to 1".into()));
            }
        }
        Ok(())
    }

    /// Mean detection count in the bin covering `range`.
    pub fn mean_count_at(&self, range: f64) -> f64 {
        let dist = &self.count_dists[self.config.range_bin(range)];
        dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Fit a model from (target state, recorded cloud) pairs. Each pair is one
/// frame of a single-target recording; detections farther than the train
/// gate from the target shell (noise, clutter) are ignored for the offset
/// mixtures but still shape nothing else, while the gated count per frame
/// feeds the range-binned count distribution.
pub fn ddm_fit(
    training: &[(TargetInSensorFrame, PointCloud)],
    cfg: &DdmConfig,
) -> Result<DdmModel> {
    cfg.validate()?;
    if training.is_empty() {
        return Err(Error::EmptyInput("ddm_fit needs at least one training pair"));
    }
    let mut offsets: Vec<Vec<[f64; 3]>> = vec![Vec::new(); cfg.aspect_bins];
    let mut counts: Vec<Vec<usize>> = vec![Vec::new(); cfg.range_bins()];
    for (target, cloud) in training {
        let abin = cfg.aspect_bin(target.aspect());
        let mut gated = 0usize;
        for det in &cloud.detections {
            let p = Vec2::from_angle(det.phi) * det.r;
            if target.shell_distance(p) > cfg.train_gate {
                continue;
            }
            gated += 1;
            let body = (p - target.center()).rotated(-target.relative_yaw);
            let residual = det.doppler - target.expected_doppler_at(p);
            offsets[abin].push([body.x, body.y, residual]);
        }
        counts[cfg.range_bin(target.range)].push(gated.min(cfg.k_max));
    }
    if offsets.iter().all(|bin| bin.is_empty()) {
        return Err(Error::EmptyInput("no training detections fell within the gate"));
    }

    let fitted: Vec<Option<Mixture3>> = offsets
        .iter()
        .map(|bin| if bin.is_empty() { None } else { Some(fit_best_mixture(bin, cfg)) })
        .collect();
    let mixtures = inherit(fitted, |i, j| {
        let d = i.abs_diff(j);
        d.min(cfg.aspect_bins - d)
    });

    let raw_dists: Vec<Option<Vec<f64>>> = counts
        .iter()
        .map(|bin| {
            if bin.is_empty() {
                return None;
            }
            let mut dist = vec![0.0; cfg.k_max + 1];
            for &k in bin {
                dist[k] += 1.0;
            }
            let total = bin.len() as f64;
            for p in &mut dist {
                *p /= total;
            }
            Some(dist)
        })
        .collect();
    let count_dists = inherit(raw_dists, |i, j| i.abs_diff(j));

    let model = DdmModel { config: *cfg, mixtures, count_dists };
    model.validate()?;
    Ok(model)
}

/// Fill `None` bins from the nearest `Some` bin under `dist`; ties resolve
/// to the lower source index.
fn inherit<T: Clone>(bins: Vec<Option<T>>, dist: impl Fn(usize, usize) -> usize) -> Vec<T> {
    let populated: Vec<usize> =
        bins.iter().enumerate().filter(|(_, b)| b.is_some()).map(|(i, _)| i).collect();
    bins.iter()
        .enumerate()
        .map(|(i, b)| match b {
            Some(v) => v.clone(),
            None => {
                let src = *populated
                    .iter()
                    .min_by_key(|&&j| (dist(i, j), j))
                    .expect("at least one populated bin");
                bins[src].clone().expect("populated")
            }
        })
        .collect()
}

/// BIC model selection over component counts.
fn fit_best_mixture(samples: &[[f64; 3]], cfg: &DdmConfig) -> Mixture3 {
    let distinct = count_distinct(samples);
    let k_top = cfg.max_components.min(distinct).max(1);
    let n = samples.len() as f64;
    let mut best: Option<(f64, Mixture3)> = None;
    for k in 1..=k_top {
        let mix = fit_mixture(samples, k, cfg.em_iterations, cfg.covariance_floor);
        let free_params = (k * 10 - 1) as f64; // 3 mean + 6 cov + 1 weight each, simplex-constrained
        let bic = -2.0 * mix.loglik(samples) + free_params * n.ln();
        if best.as_ref().map_or(true, |(b, _)| bic < *b) {
            best = Some((bic, mix));
        }
    }
    best.expect("at least k=1 fitted").1
}

fn count_distinct(samples: &[[f64; 3]]) -> usize {
    let mut sorted: Vec<[f64; 3]> = samples.to_vec();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted.dedup();
    sorted.len()
}

/// Deterministic EM: farthest-point initialization, then expectation /
/// maximization until the log-likelihood stalls.
fn fit_mixture(samples: &[[f64; 3]], k: usize, max_iters: usize, floor: f64) -> Mixture3 {
    let n = samples.len();
    let (global_mean, global_cov) = moments(samples);

    // Seed means: start at the sample nearest the global mean, then
    // repeatedly take the sample farthest from all chosen seeds.
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    let nearest = (0..n)
        .min_by(|&a, &b| {
            sq_dist(&samples[a], &global_mean).total_cmp(&sq_dist(&samples[b], &global_mean))
        })
        .expect("non-empty");
    seeds.push(nearest);
    while seeds.len() < k {
        let far = (0..n)
            .max_by(|&a, &b| {
                let da = seeds
                    .iter()
                    .map(|&s| sq_dist(&samples[a], &samples[s]))
                    .fold(f64::INFINITY, f64::min);
                let db = seeds
                    .iter()
                    .map(|&s| sq_dist(&samples[b], &samples[s]))
                    .fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a)) // tie to the lower index
            })
            .expect("non-empty");
        seeds.push(far);
    }

    let mut weights = vec![1.0 / k as f64; k];
    let mut comps: Vec<Gaussian3> =
        seeds.iter().map(|&s| Gaussian3::new(samples[s], global_cov, floor)).collect();
    let mut resp = vec![vec![0.0; k]; n];
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        // E step.
        let mut ll = 0.0;
        for (i, x) in samples.iter().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|j| {
                    if weights[j] > 0.0 {
                        weights[j].ln() + comps[j].logpdf(x)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let lse = log_sum_exp(&logs);
            ll += lse;
            for j in 0..k {
                resp[i][j] = (logs[j] - lse).exp();
            }
        }
        // M step.
        for j in 0..k {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            if nk < 1e-12 {
                weights[j] = 0.0;
                continue; // starved component keeps its parameters
            }
            weights[j] = nk / n as f64;
            let mut mean = [0.0; 3];
            for (r, x) in resp.iter().zip(samples) {
                for d in 0..3 {
                    mean[d] += r[j] * x[d];
                }
            }
            for d in 0..3 {
                mean[d] /= nk;
            }
            let mut cov = [[0.0; 3]; 3];
            for (r, x) in resp.iter().zip(samples) {
                let d = [x[0] - mean[0], x[1] - mean[1], x[2] - mean[2]];
                for a in 0..3 {
                    for b in 0..3 {
                        cov[a][b] += r[j] * d[a] * d[b];
                    }
                }
            }
            for a in 0..3 {
                for b in 0..3 {
                    cov[a][b] /= nk;
                }
            }
            comps[j] = Gaussian3::new(mean, cov, floor);
        }
        let wsum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= wsum;
        }
        if (ll - prev_ll).abs() < 1e-9 * (1.0 + ll.abs()) {
            break;
        }
        prev_ll = ll;
    }
    Mixture3 { weights, components: comps }
}

fn moments(samples: &[[f64; 3]]) -> ([f64; 3], [[f64; 3]; 3]) {
    let n = samples.len() as f64;
    let mut mean = [0.0; 3];
    for x in samples {
        for d in 0..3 {
            mean[d] += x[d];
        }
    }
    for d in 0..3 {
        mean[d] /= n;
    }
    let mut cov = [[0.0; 3]; 3];
    for x in samples {
        let d = [x[0] - mean[0], x[1] - mean[1], x[2] - mean[2]];
        for a in 0..3 {
            for b in 0..3 {
                cov[a][b] += d[a] * d[b] / n;
            }
        }
    }
    (mean, cov)
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn cholesky3(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 1e-300 {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_solve(l: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i][j] * y[j];
        }
        y[i] = s / l[i][i];
    }
    y
}

/// Sample one frame from the model. Per visible target, one uniform picks
/// the detection count, then each detection consumes one uniform (component
/// choice) and three normals. Counts always draw even when zero detections
/// result, keeping streams aligned across frames.
pub fn ddm_sample(
    frame: &Frame,
    sensor: &SensorPose,
    model: &DdmModel,
    rng: &mut impl Rng,
) -> PointCloud {
    let ws = sensor.world(&frame.ego);
    let cfg = &model.config;
    let mut detections: Vec<Detection> = Vec::new();
    for idx in 0..frame.targets.len() {
        if frame_visibility(frame, idx, sensor) <= 0.0 {
            continue;
        }
        let t = TargetInSensorFrame::from_states(&frame.targets[idx], &frame.ego, sensor);
        let dist = &model.count_dists[cfg.range_bin(t.range)];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut count = cfg.k_max;
        for (k, p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                count = k;
                break;
            }
        }
        let mixture = &model.mixtures[cfg.aspect_bin(t.aspect())];
        let center = t.center();
        for _ in 0..count {
            let [ox, oy, residual] = mixture.sample(rng);
            let p = center + Vec2::new(ox, oy).rotated(t.relative_yaw);
            let (r, phi) = (p.norm(), p.angle());
            if !ws.in_fov(r, phi) {
                continue; // clipped at the coverage cone
            }
            detections.push(Detection { r, phi, doppler: t.expected_doppler_at(p) + residual });
        }
    }
    PointCloud { frame_index: frame.index, t: frame.t, detections }
}
