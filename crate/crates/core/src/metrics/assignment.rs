//! Exact minimum-cost assignment (Hungarian method with potentials,
//! O(rows * cols^2)). Used for OSPA, the transportless track matching, and
//! anywhere an optimal pairing is required instead of a greedy one.

/// Cost used to forbid a pairing while keeping the matrix total; callers
/// filter such pairs out afterwards. Large enough to dominate any realistic
/// geometric cost, small enough to stay far from overflow.
pub const FORBIDDEN: f64 = 1e9;

/// Solve the rectangular assignment problem for a row-major `rows x cols`
/// cost matrix with `rows <= cols`. Every row is assigned a distinct
/// column; the returned vector maps row index to column index.
fn solve_rows(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols && cost.len() == rows * cols);
    // Potentials-based shortest augmenting path, 1-indexed over columns.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut assigned_row = vec![0usize; cols + 1]; // 0 = free column
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; rows];
    for j in 1..=cols {
        if assigned_row[j] != 0 {
            row_to_col[assigned_row[j] - 1] = j - 1;
        }
    }
    debug_assert!(row_to_col.iter().all(|&c| c != usize::MAX));
    row_to_col
}

/// Minimum-cost pairing between two index sets given their `m x n`
/// row-major cost matrix. All indices of the smaller side are paired.
/// Returns (i, j) pairs sorted by i.
pub fn assign_min(cost: &[f64], m: usize, n: usize) -> Vec<(usize, usize)> {
    if m == 0 || n == 0 {
        return Vec::new();
    }
    if m <= n {
        solve_rows(cost, m, n).into_iter().enumerate().collect()
    } else {
        // Transpose, solve with columns as rows, flip back.
        let mut t = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                t[j * m + i] = cost[i * n + j];
            }
        }
        let mut pairs: Vec<(usize, usize)> =
            solve_rows(&t, n, m).into_iter().enumerate().map(|(j, i)| (i, j)).collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Total cost of a pairing under a row-major cost matrix.
pub fn pairing_cost(cost: &[f64], n_cols: usize, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| cost[i * n_cols + j]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over all injections of rows into columns.
    fn brute_force(cost: &[f64], m: usize, n: usize) -> f64 {
        fn rec(
            cost: &[f64],
            n: usize,
            row: usize,
            m: usize,
            used: &mut Vec<bool>,
            acc: f64,
            best: &mut f64,
        ) {
            if row == m {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, m, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let (rows, cols, matrix): (usize, usize, Vec<f64>) = if m <= n {
            (m, n, cost.to_vec())
        } else {
            let mut t = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    t[j * m + i] = cost[i * n + j];
                }
            }
            (n, m, t)
        };
        let mut best = f64::INFINITY;
        rec(&matrix, cols, 0, rows, &mut vec![false; cols], 0.0, &mut best);
        best
    }

    #[test]
    fn known_square_case() {
        // Classic 3x3 with optimum 5 (0->1, 1->0, 2->2).
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let pairs = assign_min(&cost, 3, 3);
        let total = pairing_cost(&cost, 3, &pairs);
        assert_eq!(total, 5.0);
        assert_eq!(pairs, vec![(0, 1), (1, 0), (2, 2)]);
    }

    #[test]
    fn rectangular_both_orientations() {
        let cost = [10.0, 2.0, 8.0, 7.0, 3.0, 1.0];
        // 2x3: rows fewer.
        let pairs = assign_min(&cost, 2, 3);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairing_cost(&cost, 3, &pairs), brute_force(&cost, 2, 3));
        // 3x2: columns fewer.
        let pairs = assign_min(&cost, 3, 2);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairing_cost(&cost, 2, &pairs), brute_force(&cost, 3, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matches_brute_force(
            m in 1usize..6,
            n in 1usize..6,
            seed in 0u64..1_000_000,
        ) {
            // Small deterministic matrix from the seed.
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 1000) as f64 / 10.0
            };
            let cost: Vec<f64> = (0..m * n).map(|_| next()).collect();
            let pairs = assign_min(&cost, m, n);
            prop_assert_eq!(pairs.len(), m.min(n));
            let got = pairing_cost(&cost, n, &pairs);
            let want = brute_force(&cost, m, n);
            prop_assert!((got - want).abs() < 1e-9, "got {} want {}", got, want);
        }
    }
}
