//! Planar geometry used across the pipeline: vectors, oriented rectangles,
//! ray casting and convex polygon clipping.
//!
//! All angles are radians. Angles that represent a heading or bearing are
//! normalized to the half-open interval `(-pi, pi]`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let wrapped = (a + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}

/// 2-D vector / point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector for a heading angle.
    pub fn from_angle(a: f64) -> Self {
        Vec2 { x: a.cos(), y: a.sin() }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product; positive when `o` lies
    /// counter-clockwise of `self`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotate counter-clockwise by `a`.
    pub fn rotated(self, a: f64) -> Vec2 {
        let (s, c) = a.sin_cos();
        Vec2 { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }

    pub fn scaled(self, k: f64) -> Vec2 {
        Vec2 { x: self.x * k, y: self.y * k }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2 { x: self.x + o.x, y: self.y + o.y }
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2 { x: self.x - o.x, y: self.y - o.y }
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        self.scaled(k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2 { x: -self.x, y: -self.y }
    }
}

/// Rectangle with center, heading and full extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    /// Heading of the long axis.
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Vec2, yaw: f64, length: f64, width: f64) -> Self {
        OrientedBox { center, yaw, length, width }
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    /// Corners in counter-clockwise order, starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        let local =
            [Vec2::new(hl, hw), Vec2::new(-hl, hw), Vec2::new(-hl, -hw), Vec2::new(hl, -hw)];
        local.map(|p| self.center + p.rotated(self.yaw))
    }

    /// Points spread evenly along the perimeter, starting at the
    /// front-left corner and walking counter-clockwise.
    pub fn shell_points(&self, n: usize) -> Vec<Vec2> {
        assert!(n >= 1, "shell needs at least one point");
        let corners = self.corners();
        let sides = [
            (corners[0], corners[1]),
            (corners[1], corners[2]),
            (corners[2], corners[3]),
            (corners[3], corners[0]),
        ];
        let side_len = [self.length, self.width, self.length, self.width];
        let perimeter: f64 = 2.0 * (self.length + self.width);
        let step = perimeter / n as f64;
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = i as f64 * step;
            for (k, (a, b)) in sides.iter().enumerate() {
                if s <= side_len[k] || k == 3 {
                    let f = (s / side_len[k]).min(1.0);
                    pts.push(*a + (*b - *a) * f);
                    break;
                }
                s -= side_len[k];
            }
        }
        pts
    }

    /// True when `p` is inside or on the boundary.
    pub fn contains(&self, p: Vec2) -> bool {
        let local = (p - self.center).rotated(-self.yaw);
        local.x.abs() <= 0.5 * self.length + 1e-12 && local.y.abs() <= 0.5 * self.width + 1e-12
    }
}

/// Intersection of a ray (`origin`, unit `dir`) with segment `a..b`.
/// Returns the ray parameter (distance along the ray) when they meet.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None; // parallel; grazing contact handled by adjacent edges
    }
    let ao = a - origin;
    let t = ao.cross(e) / denom;
    let s = ao.cross(dir) / denom;
    if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
        Some(t)
    } else {
        None
    }
}

/// Nearest point where a ray strikes a rectangle.
#[derive(Clone, Copy, Debug)]
pub struct RayHit {
    /// Distance along the ray to the hit point.
    pub dist: f64,
    /// Unit direction of the struck edge.
    pub edge_dir: Vec2,
    /// Full length of the struck edge.
    pub edge_len: f64,
}

/// Nearest intersection of a ray (`origin`, unit `dir`) with a rectangle.
pub fn ray_box(origin: Vec2, dir: Vec2, rect: &OrientedBox) -> Option<RayHit> {
    let c = rect.corners();
    let mut best: Option<RayHit> = None;
    for i in 0..4 {
        let (a, b) = (c[i], c[(i + 1) % 4]);
        if let Some(t) = ray_segment(origin, dir, a, b) {
            if best.map_or(true, |h| t < h.dist) {
                let e = b - a;
                let len = e.norm();
                best = Some(RayHit {
                    dist: t,
                    edge_dir: if len > 0.0 { e.scaled(1.0 / len) } else { dir },
                    edge_len: len,
                });
            }
        }
    }
    best
}

/// True when the open segment from `a` to `b` passes through `rect`.
///
/// Touching the boundary exactly at `b` (the sample point itself sitting on
/// the occluder shell) does not count as blocked; crossing an edge strictly
/// between the endpoints does, as does `b` lying strictly inside.
pub fn segment_blocked(a: Vec2, b: Vec2, rect: &OrientedBox) -> bool {
    let d = b - a;
    let len = d.norm();
    if len < 1e-12 {
        return false;
    }
    let dir = d.scaled(1.0 / len);
    let corners = rect.corners();
    for i in 0..4 {
        if let Some(t) = ray_segment(a, dir, corners[i], corners[(i + 1) % 4]) {
            if t > 1e-9 && t < len - 1e-9 {
                return true;
            }
        }
    }
    // No strict edge crossing: blocked only if the far endpoint is interior.
    let local = (b - rect.center).rotated(-rect.yaw);
    local.x.abs() < 0.5 * rect.length - 1e-9 && local.y.abs() < 0.5 * rect.width - 1e-9
}

/// Signed area of a polygon (positive for counter-clockwise winding).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a.cross(b);
    }
    0.5 * acc
}

/// Clip polygon `subject` against a convex counter-clockwise `clip` polygon
/// (Sutherland-Hodgman). Returns the intersection polygon, possibly empty.
pub fn clip_polygon(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output: Vec<Vec2> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b - a;
        let input = std::mem::take(&mut output);
        let inside = |p: Vec2| edge.cross(p - a) >= 0.0;
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = inside(cur);
            let prev_in = inside(prev);
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

/// Intersection point of the infinite lines through `p1..p2` and `a..b`.
/// Callers guarantee the lines are not parallel.
fn line_intersection(p1: Vec2, p2: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let d1 = p2 - p1;
    let d2 = b - a;
    let denom = d1.cross(d2);
    if denom.abs() < 1e-15 {
        return p2; // near-parallel: either endpoint is on the clip line
    }
    let t = (a - p1).cross(d2) / denom;
    p1 + d1 * t
}

/// Area of the overlap of two oriented rectangles.
pub fn box_intersection_area(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let clipped = clip_polygon(&a.corners(), &b.corners());
    polygon_area(&clipped).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn angle_normalization_range() {
        assert_relative_eq!(normalize_angle(3.0 * PI), PI);
        assert_relative_eq!(normalize_angle(-PI), PI);
        assert_relative_eq!(normalize_angle(-3.5 * PI), 0.5 * PI);
        assert_eq!(normalize_angle(0.0), 0.0);
        for k in -8..=8 {
            let a = 0.3 + k as f64 * 2.0 * PI;
            assert_relative_eq!(normalize_angle(a), 0.3, epsilon = 1e-9);
        }
    }

    #[test]
    fn corners_wind_counter_clockwise() {
        let b = OrientedBox::new(Vec2::new(1.0, 2.0), 0.7, 4.0, 2.0);
        let area = polygon_area(&b.corners());
        assert!(area > 0.0);
        assert_relative_eq!(area, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn shell_points_lie_on_perimeter() {
        let b = OrientedBox::new(Vec2::new(3.0, -1.0), 0.4, 4.5, 1.8);
        let pts = b.shell_points(32);
        assert_eq!(pts.len(), 32);
        for p in &pts {
            let local = (*p - b.center).rotated(-b.yaw);
            let on_x = (local.x.abs() - 2.25).abs() < 1e-9 && local.y.abs() <= 0.9 + 1e-9;
            let on_y = (local.y.abs() - 0.9).abs() < 1e-9 && local.x.abs() <= 2.25 + 1e-9;
            assert!(on_x || on_y, "{local:?} not on shell");
        }
        // Evenly spaced: consecutive arc distance equals perimeter / n.
        let step = 2.0 * (4.5 + 1.8) / 32.0;
        for w in pts.windows(2) {
            assert!(w[0].dist(w[1]) <= step + 1e-9);
        }
    }

    #[test]
    fn ray_hits_facing_edge() {
        let b = OrientedBox::new(Vec2::new(10.0, 0.0), 0.0, 4.0, 2.0);
        let hit = ray_box(Vec2::ZERO, Vec2::new(1.0, 0.0), &b).expect("hit");
        assert_relative_eq!(hit.dist, 8.0, epsilon = 1e-12);
        // Edge struck is the near short side, which is vertical.
        assert_relative_eq!(hit.edge_dir.x.abs(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(hit.edge_len, 2.0, epsilon = 1e-12);
        assert!(ray_box(Vec2::ZERO, Vec2::new(-1.0, 0.0), &b).is_none());
    }

    #[test]
    fn ray_misses_outside_silhouette() {
        let b = OrientedBox::new(Vec2::new(10.0, 0.0), 0.0, 4.0, 2.0);
        assert!(ray_box(Vec2::ZERO, Vec2::from_angle(0.3), &b).is_none());
        assert!(ray_box(Vec2::ZERO, Vec2::from_angle(0.05), &b).is_some());
    }

    #[test]
    fn segment_blocking() {
        let wall = OrientedBox::new(Vec2::new(5.0, 0.0), 0.0, 1.0, 4.0);
        assert!(segment_blocked(Vec2::ZERO, Vec2::new(10.0, 0.0), &wall));
        assert!(!segment_blocked(Vec2::ZERO, Vec2::new(10.0, 5.0), &wall));
        // Endpoint exactly on the wall shell is not "blocked".
        assert!(!segment_blocked(Vec2::ZERO, Vec2::new(4.5, 0.0), &wall));
        // Endpoint strictly inside is.
        assert!(segment_blocked(Vec2::ZERO, Vec2::new(5.0, 0.0), &wall));
    }

    #[test]
    fn identical_boxes_overlap_fully() {
        let b = OrientedBox::new(Vec2::new(2.0, 3.0), 1.1, 4.5, 1.8);
        assert_relative_eq!(box_intersection_area(&b, &b), b.area(), epsilon = 1e-12);
        // Exactness matters downstream: clipping a polygon against itself
        // must return bit-identical vertices, so self-overlap equals the
        // shoelace area of the corner ring exactly. IoU relies on this.
        assert_eq!(box_intersection_area(&b, &b), polygon_area(&b.corners()).abs());
    }

    #[test]
    fn offset_axis_aligned_overlap() {
        let a = OrientedBox::new(Vec2::ZERO, 0.0, 2.0, 2.0);
        let b = OrientedBox::new(Vec2::new(1.0, 1.0), 0.0, 2.0, 2.0);
        assert_relative_eq!(box_intersection_area(&a, &b), 1.0, epsilon = 1e-12);
        let c = OrientedBox::new(Vec2::new(5.0, 5.0), 0.0, 2.0, 2.0);
        assert_eq!(box_intersection_area(&a, &c), 0.0);
    }

    #[test]
    fn rotated_overlap_is_symmetric() {
        let a = OrientedBox::new(Vec2::ZERO, 0.3, 4.0, 2.0);
        let b = OrientedBox::new(Vec2::new(0.8, -0.4), 1.2, 3.0, 1.5);
        let ab = box_intersection_area(&a, &b);
        let ba = box_intersection_area(&b, &a);
        assert_relative_eq!(ab, ba, epsilon = 1e-9);
        assert!(ab > 0.0 && ab <= b.area());
    }
}
