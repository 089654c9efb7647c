//! Independent reference implementations of the point-set metrics.
//!
//! Everything here favors obviousness over speed: the Wasserstein oracle
//! solves the transportation problem as a plain linear program with a
//! dense two-phase simplex, the OSPA oracle enumerates every assignment,
//! and the divergence oracle enumerates every point pair. These exist to
//! cross-check the production implementations on small inputs; none of
//! them is fit for real workloads.

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

// ---------------------------------------------------------------------
// Dense two-phase simplex

const EPS: f64 = 1e-9;

/// Minimize `c . x` subject to `a x = b`, `x >= 0`, by the tableau simplex
/// method with Bland's anti-cycling rule. Returns the optimal objective,
/// or None when the constraints are infeasible. Redundant equality rows
/// are tolerated. Unbounded problems panic; transportation instances are
/// always bounded.
pub fn solve_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let rows = a.len();
    let vars = c.len();
    assert_eq!(b.len(), rows);
    assert!(a.iter().all(|row| row.len() == vars));

    // Tableau layout: original vars, then one artificial per row, then rhs.
    let total = vars + rows;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for (i, row) in a.iter().enumerate() {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut line = vec![0.0; total + 1];
        for (j, &v) in row.iter().enumerate() {
            line[j] = flip * v;
        }
        line[vars + i] = 1.0;
        line[total] = flip * b[i];
        t.push(line);
    }
    let mut basis: Vec<usize> = (vars..total).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, row: usize, col: usize| {
        let p = t[row][col];
        for v in t[row].iter_mut() {
            *v /= p;
        }
        for i in 0..t.len() {
            if i != row && t[i][col].abs() > 0.0 {
                let f = t[i][col];
                for j in 0..=total {
                    t[i][j] -= f * t[row][j];
                }
            }
        }
        basis[row] = col;
    };

    // One simplex phase over the given objective, entering restricted to
    // columns below `limit`.
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], limit: usize| {
        loop {
            // Reduced costs from the current basis.
            let mut entering = None;
            for j in 0..limit {
                if basis.contains(&j) {
                    continue;
                }
                let mut reduced = cost[j];
                for (i, &bi) in basis.iter().enumerate() {
                    reduced -= cost[bi] * t[i][j];
                }
                if reduced < -EPS {
                    entering = Some(j); // Bland: first improving index
                    break;
                }
            }
            let Some(col) = entering else { return };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..t.len() {
                if t[i][col] > EPS {
                    let ratio = t[i][total] / t[i][col];
                    let better = match leaving {
                        None => true,
                        // Bland again: on ratio ties, lowest basis index.
                        Some((li, lr)) => {
                            ratio < lr - EPS || (ratio < lr + EPS && basis[i] < basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let (row, _) = leaving.expect("transportation LPs are bounded");
            pivot(t, basis, row, col);
        }
    };

    // Phase 1: drive the artificials to zero.
    let mut phase1 = vec![0.0; total];
    for v in phase1.iter_mut().skip(vars) {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &phase1, total);
    let infeasibility: f64 =
        basis.iter().enumerate().filter(|(_, &bi)| bi >= vars).map(|(i, _)| t[i][total]).sum();
    if infeasibility > 1e-7 {
        return None;
    }
    // Zero-level artificials still in the basis: pivot them out where the
    // row touches an original column, otherwise the row is redundant and
    // can be dropped.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= vars {
            if let Some(col) = (0..vars).find(|&j| t[i][j].abs() > EPS) {
                pivot(&mut t, &mut basis, i, col);
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // Phase 2 on the real objective, artificial columns barred.
    let mut phase2 = vec![0.0; total];
    phase2[..vars].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, vars);
    Some(basis.iter().enumerate().map(|(i, &bi)| phase2[bi] * t[i][total]).sum())
}

/// Exact Earth Mover's Distance between uniform empirical distributions,
/// posed directly as the transportation LP.
pub fn emd_lp(xs: &[[f64; 3]], ys: &[[f64; 3]]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty());
    let m = xs.len();
    let n = ys.len();
    let vars = m * n;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m + n);
    let mut b = Vec::with_capacity(m + n);
    for i in 0..m {
        let mut row = vec![0.0; vars];
        for j in 0..n {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(1.0 / m as f64);
    }
    for j in 0..n {
        let mut row = vec![0.0; vars];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(1.0 / n as f64);
    }
    let mut c = Vec::with_capacity(vars);
    for x in xs {
        for y in ys {
            c.push(dist3(x, y));
        }
    }
    solve_lp(&a, &b, &c).expect("transportation problems are feasible")
}

// ---------------------------------------------------------------------
// Assignment enumeration

/// OSPA by explicit enumeration of every injective assignment from the
/// smaller set into the larger.
pub fn ospa_bruteforce(xs: &[[f64; 2]], ys: &[[f64; 2]], p: f64, c: f64) -> f64 {
    if xs.is_empty() && ys.is_empty() {
        return 0.0;
    }
    let (small, large) = if xs.len() <= ys.len() { (xs, ys) } else { (ys, xs) };
    if small.is_empty() {
        return c;
    }
    fn best_assignment(
        i: usize,
        small: &[[f64; 2]],
        large: &[[f64; 2]],
        used: &mut [bool],
        p: f64,
        c: f64,
    ) -> f64 {
        if i == small.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..large.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let here = dist2(&small[i], &large[j]).min(c).powf(p);
            best = best.min(here + best_assignment(i + 1, small, large, used, p, c));
            used[j] = false;
        }
        best
    }
    let mut used = vec![false; large.len()];
    let matched = best_assignment(0, small, large, &mut used, p, c);
    let misses = (large.len() - small.len()) as f64 * c.powf(p);
    ((matched + misses) / large.len() as f64).powf(1.0 / p)
}

// ---------------------------------------------------------------------
// Pair enumeration

/// Mean distance from each point of `xs` to its nearest point of `ys`,
/// from the full pair table.
pub fn dpp_enum(xs: &[[f64; 3]], ys: &[[f64; 3]]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty());
    let mut sum = 0.0;
    for x in xs {
        let mut best = f64::INFINITY;
        for y in ys {
            best = best.min(dist3(x, y));
        }
        sum += best;
    }
    sum / xs.len() as f64
}

pub fn dpp_worst_enum(xs: &[[f64; 3]], ys: &[[f64; 3]]) -> f64 {
    dpp_enum(xs, ys).max(dpp_enum(ys, xs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_moves_unit_mass_across() {
        let d = emd_lp(&[[0.0, 0.0, 0.0]], &[[3.0, 4.0, 0.0]]);
        assert!((d - 5.0).abs() < 1e-9);
    }

    #[test]
    fn lp_splits_mass_between_coprime_sizes() {
        // Supplies 1/2 each, demands 1/3 each; the middle demand pulls
        // equal shares from both sides.
        let xs = [[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
        let ys = [[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [3.0, 0.0, 0.0]];
        let d = emd_lp(&xs, &ys);
        assert!((d - 0.5).abs() < 1e-9, "{d}");
    }

    #[test]
    fn lp_identity_is_zero() {
        let xs = [[1.0, 2.0, 3.0], [-4.0, 0.5, 0.0], [7.0, 7.0, 7.0]];
        assert!(emd_lp(&xs, &xs).abs() < 1e-9);
    }

    #[test]
    fn lp_rejects_infeasible_systems() {
        // x1 = 1 and x1 = 2 cannot both hold.
        let a = vec![vec![1.0], vec![1.0]];
        assert_eq!(solve_lp(&a, &[1.0, 2.0], &[1.0]), None);
    }

    #[test]
    fn lp_handles_redundant_rows() {
        // Second row repeats the first; the optimum is still x = 1.
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let obj = solve_lp(&a, &[1.0, 1.0], &[2.0, 3.0]).expect("feasible");
        assert!((obj - 2.0).abs() < 1e-9);
    }

    #[test]
    fn ospa_known_values() {
        let x = [[0.0, 0.0]];
        let y = [[0.0, 0.0], [10.0, 0.0]];
        // One perfect match, one miss charged at the cutoff.
        let expect = (25.0f64 / 2.0).sqrt();
        assert!((ospa_bruteforce(&x, &y, 2.0, 5.0) - expect).abs() < 1e-12);
        assert_eq!(ospa_bruteforce(&[], &[], 2.0, 5.0), 0.0);
        assert_eq!(ospa_bruteforce(&x, &[], 2.0, 5.0), 5.0);
        assert!(ospa_bruteforce(&y, &y, 2.0, 5.0).abs() < 1e-12);
    }

    #[test]
    fn ospa_picks_the_cheaper_assignment() {
        let x = [[0.0, 0.0], [2.0, 0.0]];
        let y = [[2.1, 0.0], [0.1, 0.0]];
        // Crossed pairing costs 0.1 each; straight pairing would cost ~2.
        let expect = ((2.0 * 0.1f64.powi(2)) / 2.0).sqrt();
        assert!((ospa_bruteforce(&x, &y, 2.0, 5.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn dpp_enumeration_examples() {
        let xs = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let ys = [[1.0, 0.0, 0.0]];
        assert_eq!(dpp_enum(&xs, &ys), 1.0);
        assert_eq!(dpp_enum(&ys, &xs), 1.0);
        let zs = [[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]];
        let one = [[0.0, 0.0, 0.0]];
        assert_eq!(dpp_worst_enum(&one, &zs), 2.0);
    }
}
