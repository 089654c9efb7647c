//! Explicit point-cloud metrics: nearest-neighbour divergence, exact
//! Wasserstein distance, its 1-D per-feature variant, and the point number
//! error.
//!
//! All operations treat their inputs as unordered multisets. The empty-set
//! cases (except for `pne`) are rejected here; the per-frame policy that
//! skips or caps empty frames lives with the scenario scorer.

use super::transport::uniform_emd;
use super::MetricPoint3;
use crate::error::{Error, Result};
use crate::sensor::PointCloud;

/// Project a point cloud into the explicit comparison space: sensor-frame
/// Cartesian position plus the weighted Doppler coordinate.
pub fn cloud_points(cloud: &PointCloud, doppler_weight: f64) -> Vec<MetricPoint3> {
    cloud
        .detections
        .iter()
        .map(|d| {
            MetricPoint3::new(d.r * d.phi.cos(), d.r * d.phi.sin(), doppler_weight * d.doppler)
        })
        .collect()
}

/// Mean distance from each point of `xs` to its nearest neighbour in `ys`.
/// Non-symmetric: see [`dpp_worst`].
pub fn dpp(xs: &[MetricPoint3], ys: &[MetricPoint3]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("dpp needs two non-empty point sets"));
    }
    let sum: f64 =
        xs.iter().map(|x| ys.iter().map(|y| x.dist(y)).fold(f64::INFINITY, f64::min)).sum();
    Ok(sum / xs.len() as f64)
}

/// Symmetrized nearest-neighbour divergence: the worse direction of the
/// two.
pub fn dpp_worst(xs: &[MetricPoint3], ys: &[MetricPoint3]) -> Result<f64> {
    Ok(dpp(xs, ys)?.max(dpp(ys, xs)?))
}

/// Exact Earth Mover's Distance between the uniform empirical
/// distributions on `xs` and `ys`, with Euclidean ground distance.
pub fn wasserstein(xs: &[MetricPoint3], ys: &[MetricPoint3]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("wasserstein needs two non-empty point sets"));
    }
    let m = xs.len();
    let n = ys.len();
    let mut cost = Vec::with_capacity(m * n);
    for x in xs {
        for y in ys {
            cost.push(x.dist(y));
        }
    }
    Ok(uniform_emd(&cost, m, n))
}

/// 1-D Wasserstein-1 distance between two scalar sample sets, computed as
/// the integral of the absolute CDF difference over the merged samples.
pub fn wd_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("wd_1d needs two non-empty sample sets"));
    }
    let wa = 1.0 / a.len() as f64;
    let wb = 1.0 / b.len() as f64;
    let mut events: Vec<(f64, f64)> =
        a.iter().map(|&v| (v, wa)).chain(b.iter().map(|&v| (v, -wb))).collect();
    events.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite samples"));
    let mut acc = 0.0_f64;
    let mut last = events[0].0;
    let mut total = 0.0;
    for (v, w) in events {
        total += acc.abs() * (v - last);
        acc += w;
        last = v;
    }
    Ok(total)
}

/// Absolute point number error between cloud sizes.
pub fn pne(m: usize, n: usize) -> usize {
    m.abs_diff(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(x: f64, y: f64, d: f64) -> MetricPoint3 {
        MetricPoint3::new(x, y, d)
    }

    #[test]
    fn dpp_examples() {
        let xs = [p(0.0, 0.0, 0.0)];
        let ys = [p(1.0, 0.0, 0.0), p(5.0, 0.0, 0.0)];
        assert_eq!(dpp(&xs, &ys).unwrap(), 1.0);
        let xs = [p(0.0, 0.0, 0.0), p(2.0, 0.0, 0.0)];
        let ys = [p(1.0, 0.0, 0.0)];
        assert_eq!(dpp(&xs, &ys).unwrap(), 1.0);
        assert_eq!(dpp(&ys, &ys).unwrap(), 0.0);
        assert!(dpp(&xs, &[]).is_err());
    }

    #[test]
    fn dpp_worst_takes_bad_direction() {
        let xs = [p(0.0, 0.0, 0.0)];
        let ys = [p(0.0, 0.0, 0.0), p(4.0, 0.0, 0.0)];
        assert_eq!(dpp(&xs, &ys).unwrap(), 0.0);
        assert_eq!(dpp(&ys, &xs).unwrap(), 2.0);
        assert_eq!(dpp_worst(&xs, &ys).unwrap(), 2.0);
        assert_eq!(dpp_worst(&ys, &xs).unwrap(), 2.0);
    }

    #[test]
    fn wasserstein_examples() {
        let xs = [p(0.0, 0.0, 0.0)];
        let ys = [p(3.0, 4.0, 0.0)];
        assert_relative_eq!(wasserstein(&xs, &ys).unwrap(), 5.0);
        let xs = [p(0.0, 0.0, 0.0), p(2.0, 0.0, 0.0)];
        let ys = [p(1.0, 0.0, 0.0), p(1.0, 0.0, 0.0)];
        assert_relative_eq!(wasserstein(&xs, &ys).unwrap(), 1.0);
        assert_eq!(wasserstein(&ys, &ys).unwrap(), 0.0);
    }

    #[test]
    fn wd_1d_examples() {
        assert_eq!(wd_1d(&[0.0], &[3.0]).unwrap(), 3.0);
        assert_relative_eq!(wd_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(wd_1d(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // Order must not matter.
        assert_eq!(wd_1d(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn pne_examples() {
        assert_eq!(pne(3, 3), 0);
        assert_eq!(pne(7, 3), 4);
        assert_eq!(pne(0, 5), 5);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn points(max_len: usize) -> impl Strategy<Value = Vec<MetricPoint3>> {
        proptest::collection::vec(
            (-50.0f64..50.0, -50.0f64..50.0, -10.0f64..10.0)
                .prop_map(|(x, y, d)| MetricPoint3::new(x, y, d)),
            1..=max_len,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn wasserstein_metric_axioms(
            xs in points(6), ys in points(6), zs in points(6),
        ) {
            let xy = wasserstein(&xs, &ys).unwrap();
            let yx = wasserstein(&ys, &xs).unwrap();
            prop_assert!((xy - yx).abs() < 1e-9, "symmetry: {} vs {}", xy, yx);
            prop_assert!(wasserstein(&xs, &xs).unwrap().abs() < 1e-12);
            let xz = wasserstein(&xs, &zs).unwrap();
            let zy = wasserstein(&zs, &ys).unwrap();
            prop_assert!(xy <= xz + zy + 1e-9, "triangle: {} > {} + {}", xy, xz, zy);
        }

        #[test]
        fn translation_invariance(
            xs in points(6), ys in points(6),
            tx in -20.0f64..20.0, ty in -20.0f64..20.0,
        ) {
            let shift = |pts: &[MetricPoint3]| -> Vec<MetricPoint3> {
                pts.iter().map(|p| MetricPoint3::new(p.x + tx, p.y + ty, p.d)).collect()
            };
            let (sx, sy) = (shift(&xs), shift(&ys));
            prop_assert!((dpp(&xs, &ys).unwrap() - dpp(&sx, &sy).unwrap()).abs() < 1e-9);
            prop_assert!((dpp_worst(&xs, &ys).unwrap() - dpp_worst(&sx, &sy).unwrap()).abs() < 1e-9);
            prop_assert!((wasserstein(&xs, &ys).unwrap() - wasserstein(&sx, &sy).unwrap()).abs() < 1e-9);
        }

        /// The 1-D distance agrees with the full transport solver on 1-D
        /// embeddings.
        #[test]
        fn wd_1d_equals_embedded_wasserstein(
            a in proptest::collection::vec(-100.0f64..100.0, 1..=8),
            b in proptest::collection::vec(-100.0f64..100.0, 1..=8),
        ) {
            let ax: Vec<MetricPoint3> = a.iter().map(|&v| MetricPoint3::new(v, 0.0, 0.0)).collect();
            let bx: Vec<MetricPoint3> = b.iter().map(|&v| MetricPoint3::new(v, 0.0, 0.0)).collect();
            let fast = wd_1d(&a, &b).unwrap();
            let full = wasserstein(&ax, &bx).unwrap();
            prop_assert!((fast - full).abs() < 1e-9, "{} vs {}", fast, full);
        }
    }
}
