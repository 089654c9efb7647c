//! Implicit metrics on tracking output: OSPA, oriented-box IoU, pooled
//! per-axis RMSE and the cardinality error, plus the optimal gated matching
//! that pairs tracks between the simulated and the reference run.

use super::assignment::{assign_min, FORBIDDEN};
use crate::error::{Error, Result};
use crate::geometry::{box_intersection_area, polygon_area, OrientedBox, Vec2};

/// Optimal sub-pattern assignment distance between two position sets.
///
/// With m = |a| <= n = |b| (sides swapped otherwise):
/// `((1/n) * (sum over the optimal assignment of min(c, d)^p + c^p * (n - m)))^(1/p)`.
/// Both sets empty gives 0; one empty set gives c.
pub fn ospa(a: &[Vec2], b: &[Vec2], p: f64, c: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("ospa order p={p} must be >= 1")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("ospa cutoff c={c} must be positive")));
    }
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let (m, n) = (small.len(), big.len());
    if n == 0 {
        return Ok(0.0);
    }
    if m == 0 {
        return Ok(c);
    }
    let mut cost = Vec::with_capacity(m * n);
    for x in small {
        for y in big {
            cost.push(x.dist(*y).min(c).powf(p));
        }
    }
    let pairs = assign_min(&cost, m, n);
    let assigned: f64 = pairs.iter().map(|&(i, j)| cost[i * n + j]).sum();
    let total = assigned + c.powf(p) * (n - m) as f64;
    Ok((total / n as f64).powf(1.0 / p))
}

/// Intersection-over-union of two oriented rectangles.
///
/// Both areas come from the shoelace formula on the corner rings, the same
/// arithmetic the clipped intersection uses, so identical boxes score
/// exactly 1.
pub fn iou(a: &OrientedBox, b: &OrientedBox) -> Result<f64> {
    if !(a.length > 0.0 && a.width > 0.0 && b.length > 0.0 && b.width > 0.0) {
        return Err(Error::InvalidArgument("iou: degenerate box".into()));
    }
    let inter = box_intersection_area(a, b);
    let area_a = polygon_area(&a.corners()).abs();
    let area_b = polygon_area(&b.corners()).abs();
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return Err(Error::InvalidArgument("iou: degenerate box".into()));
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Optimal matching between two position sets under a distance gate.
/// Pairs farther apart than `gate` are never returned.
pub fn match_by_distance(a: &[Vec2], b: &[Vec2], gate: f64) -> Vec<(usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut cost = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let d = x.dist(*y);
            cost.push(if d <= gate { d } else { FORBIDDEN });
        }
    }
    assign_min(&cost, a.len(), b.len())
        .into_iter()
        .filter(|&(i, j)| cost[i * b.len() + j] < FORBIDDEN)
        .collect()
}

/// Root mean square of a pooled error sample.
pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("rmse over zero matched pairs".into()));
    }
    let ms: f64 = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
    Ok(ms.sqrt())
}

/// Mean absolute difference of per-frame track counts.
pub fn cardinality_error(est: &[usize], reference: &[usize]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::FrameMisalignment(format!(
            "cardinality: {} vs {} frames",
            est.len(),
            reference.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::EmptyInput("cardinality over zero frames"));
    }
    let total: f64 = est.iter().zip(reference).map(|(&e, &r)| e.abs_diff(r) as f64).sum();
    Ok(total / est.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ospa_examples() {
        assert_eq!(ospa(&[], &[], 2.0, 5.0).unwrap(), 0.0);
        let b = [Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(3.0, 0.0)];
        assert_eq!(ospa(&[], &b, 2.0, 5.0).unwrap(), 5.0);
        let a = [Vec2::new(0.0, 0.0)];
        let b = [Vec2::new(3.0, 0.0)];
        assert_relative_eq!(ospa(&a, &b, 2.0, 5.0).unwrap(), 3.0);
        // Distances saturate at the cutoff.
        let far = [Vec2::new(100.0, 0.0)];
        assert_relative_eq!(ospa(&a, &far, 2.0, 5.0).unwrap(), 5.0);
        assert!(ospa(&a, &b, 0.5, 5.0).is_err());
        assert!(ospa(&a, &b, 2.0, 0.0).is_err());
    }

    #[test]
    fn ospa_cardinality_penalty() {
        // One matched pair at distance 1, one unmatched: ((1^2 + 5^2)/2)^0.5.
        let a = [Vec2::new(0.0, 0.0)];
        let b = [Vec2::new(1.0, 0.0), Vec2::new(50.0, 0.0)];
        let want = ((1.0 + 25.0) / 2.0f64).sqrt();
        assert_relative_eq!(ospa(&a, &b, 2.0, 5.0).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn iou_examples() {
        let a = OrientedBox::new(Vec2::ZERO, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let off = OrientedBox::new(Vec2::new(0.5, 0.0), 0.0, 1.0, 1.0);
        assert_relative_eq!(iou(&a, &off).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        let far = OrientedBox::new(Vec2::new(10.0, 0.0), 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &far).unwrap(), 0.0);
        let degenerate = OrientedBox::new(Vec2::ZERO, 0.0, 0.0, 1.0);
        assert!(iou(&a, &degenerate).is_err());
    }

    #[test]
    fn identical_rotated_boxes_are_exactly_one() {
        // Bit-exactness feeds the self-identity check of the evaluation.
        let b = OrientedBox::new(Vec2::new(12.3, -4.5), 0.77, 4.5, 1.8);
        assert_eq!(iou(&b, &b).unwrap(), 1.0);
    }

    #[test]
    fn matching_respects_gate() {
        let a = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)];
        let b = [Vec2::new(0.5, 0.0), Vec2::new(30.0, 0.0)];
        let pairs = match_by_distance(&a, &b, 5.0);
        assert_eq!(pairs, vec![(0, 0)]);
        // Optimality: the greedy pairing (0-0) would strand 1 at cost
        // FORBIDDEN; the optimal pairing still only keeps gated pairs.
        let a = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        let b = [Vec2::new(1.2, 0.0)];
        let pairs = match_by_distance(&a, &b, 5.0);
        assert_eq!(pairs, vec![(1, 0)]);
    }

    #[test]
    fn rmse_and_cardinality() {
        assert_eq!(rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(rmse(&[0.3, -0.4]).unwrap(), (0.25f64 / 2.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(rmse(&[0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert!(rmse(&[]).is_err());
        assert_eq!(cardinality_error(&[2, 2], &[2, 2]).unwrap(), 0.0);
        assert_eq!(cardinality_error(&[1, 3], &[2, 2]).unwrap(), 1.0);
        assert!(cardinality_error(&[1], &[1, 2]).is_err());
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn positions(max_len: usize) -> impl Strategy<Value = Vec<Vec2>> {
        proptest::collection::vec(
            (-30.0f64..30.0, -30.0f64..30.0).prop_map(|(x, y)| Vec2::new(x, y)),
            0..=max_len,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn ospa_axioms_and_bound(a in positions(5), b in positions(5), c in positions(5)) {
            let ab = ospa(&a, &b, 2.0, 5.0).unwrap();
            let ba = ospa(&b, &a, 2.0, 5.0).unwrap();
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(ab <= 5.0 + 1e-12);
            prop_assert!(ospa(&a, &a, 2.0, 5.0).unwrap().abs() < 1e-12);
            let ac = ospa(&a, &c, 2.0, 5.0).unwrap();
            let cb = ospa(&c, &b, 2.0, 5.0).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9, "triangle {} > {} + {}", ab, ac, cb);
        }

        #[test]
        fn iou_rigid_motion_invariant(
            cx in -10.0f64..10.0, cy in -10.0f64..10.0, yaw in -3.0f64..3.0,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, dyaw in -3.0f64..3.0,
            tx in -20.0f64..20.0, ty in -20.0f64..20.0, rot in -3.0f64..3.0,
        ) {
            let a = OrientedBox::new(Vec2::new(cx, cy), yaw, 4.0, 2.0);
            let b = OrientedBox::new(Vec2::new(cx + dx, cy + dy), yaw + dyaw, 3.0, 1.5);
            let move_box = |bx: &OrientedBox| OrientedBox::new(
                bx.center.rotated(rot) + Vec2::new(tx, ty),
                bx.yaw + rot,
                bx.length,
                bx.width,
            );
            let before = iou(&a, &b).unwrap();
            let after = iou(&move_box(&a), &move_box(&b)).unwrap();
            prop_assert!((0.0..=1.0).contains(&before));
            prop_assert!((before - after).abs() < 1e-9, "{} vs {}", before, after);
        }
    }
}
