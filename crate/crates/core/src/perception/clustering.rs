//! Density clustering of radar point clouds.
//!
//! Detections are lifted to (x, y, scaled doppler) and grouped by the
//! classic density rule: a point with at least `min_pts` neighbors within
//! `eps` (itself included) is a core point; clusters are the connected
//! regions of core points plus their border points; everything else is
//! discarded as clutter.
//!
//! Input order must not matter downstream, so points are first brought into
//! a canonical order. Border points reachable from two clusters go to the
//! one discovered first in that canonical order, keeping clusters disjoint
//! and the whole operation a pure function of the detection multiset.

use crate::geometry::Vec2;
use crate::scenario::WorldSensor;
use crate::sensor::{Detection, PointCloud};

/// One dense group of detections.
#[derive(Clone, Debug)]
pub struct Cluster {
    /// Member detections (sensor frame, as recorded).
    pub detections: Vec<Detection>,
    /// Member positions in world coordinates, index-aligned with
    /// `detections`.
    pub points: Vec<Vec2>,
    /// Mean world position.
    pub centroid: Vec2,
    pub mean_doppler: f64,
}

/// Cluster one frame. `ws` supplies the sensor-to-world transform of the
/// frame the cloud was recorded in.
pub fn cluster(
    cloud: &PointCloud,
    ws: &WorldSensor,
    eps: f64,
    min_pts: usize,
    doppler_scale: f64,
) -> Vec<Cluster> {
    assert!(eps > 0.0 && min_pts >= 1, "validated by PerceptionConfig");
    if cloud.is_empty() {
        return Vec::new();
    }
    // Canonical order: sort by the embedded coordinates.
    let mut pts: Vec<(Vec2, Detection)> =
        cloud.detections.iter().map(|d| (ws.to_world(d.r, d.phi), *d)).collect();
    pts.sort_by(|a, b| {
        (a.0.x, a.0.y, a.1.doppler)
            .partial_cmp(&(b.0.x, b.0.y, b.1.doppler))
            .expect("finite detections")
    });
    let n = pts.len();
    let embed: Vec<[f64; 3]> =
        pts.iter().map(|(p, d)| [p.x, p.y, doppler_scale * d.doppler]).collect();
    let eps_sq = eps * eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let d = [
                        embed[i][0] - embed[j][0],
                        embed[i][1] - embed[j][1],
                        embed[i][2] - embed[j][2],
                    ];
                    d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= eps_sq
                })
                .collect()
        })
        .collect();

    const UNVISITED: usize = usize::MAX;
    const NOISE: usize = usize::MAX - 1;
    let mut label = vec![UNVISITED; n];
    let mut cluster_id = 0usize;
    for i in 0..n {
        if label[i] != UNVISITED {
            continue;
        }
        if neighbors[i].len() < min_pts {
            label[i] = NOISE;
            continue;
        }
        label[i] = cluster_id;
        let mut queue: Vec<usize> = neighbors[i].clone();
        let mut qi = 0;
        while qi < queue.len() {
            let j = queue[qi];
            qi += 1;
            if label[j] == NOISE {
                label[j] = cluster_id; // border point
            }
            if label[j] != UNVISITED {
                continue;
            }
            label[j] = cluster_id;
            if neighbors[j].len() >= min_pts {
                queue.extend_from_slice(&neighbors[j]);
            }
        }
        cluster_id += 1;
    }

    (0..cluster_id)
        .map(|c| {
            let members: Vec<usize> = (0..n).filter(|&i| label[i] == c).collect();
            let mut centroid = Vec2::ZERO;
            let mut mean_doppler = 0.0;
            for &i in &members {
                centroid = centroid + pts[i].0;
                mean_doppler += pts[i].1.doppler;
            }
            let m = members.len() as f64;
            Cluster {
                detections: members.iter().map(|&i| pts[i].1).collect(),
                points: members.iter().map(|&i| pts[i].0).collect(),
                centroid: centroid * (1.0 / m),
                mean_doppler: mean_doppler / m,
            }
        })
        .collect()
}
