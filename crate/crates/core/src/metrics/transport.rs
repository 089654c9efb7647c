//! Exact Earth Mover's Distance between uniform empirical distributions.
//!
//! The transportation problem is scaled to integers: with |X| = m and
//! |Y| = n, every source holds n/g units and every sink m/g units, where
//! g = gcd(m, n), so total flow is m*n/g and all optimal flows are integral.
//! It is then solved as a min-cost max-flow by successive shortest paths
//! (Dijkstra on reduced costs with Johnson potentials), which is exact for
//! the non-negative Euclidean ground costs used here.

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: f64,
}

struct Graph {
    adj: Vec<Vec<Arc>>,
}

impl Graph {
    fn new(n: usize) -> Graph {
        Graph { adj: (0..n).map(|_| Vec::new()).collect() }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc { to, rev: rev_from, cap, cost });
        self.adj[to].push(Arc { to: from, rev: rev_to, cap: 0, cost: -cost });
    }
}

/// Exact EMD given the row-major `m x n` ground-distance matrix between
/// point sets X (rows) and Y (columns). Both sets carry uniform mass 1.
/// Preconditions (enforced by callers): m, n >= 1, costs finite and >= 0.
pub fn uniform_emd(cost: &[f64], m: usize, n: usize) -> f64 {
    assert!(m >= 1 && n >= 1 && cost.len() == m * n);
    let g = gcd(m, n);
    let supply = (n / g) as i64; // units per source
    let demand = (m / g) as i64; // units per sink
    let total: i64 = supply * m as i64;
    debug_assert_eq!(total, demand * n as i64);

    let source = m + n;
    let sink = m + n + 1;
    let node_count = m + n + 2;
    let mut graph = Graph::new(node_count);
    for i in 0..m {
        graph.add(source, i, supply, 0.0);
        for j in 0..n {
            graph.add(i, m + j, supply.min(demand), cost[i * n + j]);
        }
    }
    for j in 0..n {
        graph.add(m + j, sink, demand, 0.0);
    }

    let mut potential = vec![0.0f64; node_count];
    let mut flow_cost = 0.0f64;
    let mut flow: i64 = 0;

    // Dijkstra scratch buffers reused across augmentations.
    let mut dist = vec![f64::INFINITY; node_count];
    let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); node_count];

    while flow < total {
        for d in dist.iter_mut() {
            *d = f64::INFINITY;
        }
        dist[source] = 0.0;
        let mut heap = std::collections::BinaryHeap::new();
        heap.push(HeapEntry { dist: 0.0, node: source });
        while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (k, arc) in graph.adj[u].iter().enumerate() {
                if arc.cap <= 0 {
                    continue;
                }
                // Reduced cost; clamp the tiny negatives float drift makes.
                let rc = (arc.cost + potential[u] - potential[arc.to]).max(0.0);
                let nd = d + rc;
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    parent[arc.to] = (u, k);
                    heap.push(HeapEntry { dist: nd, node: arc.to });
                }
            }
        }
        // The bipartite graph is complete, so a path exists while flow
        // remains to push.
        assert!(dist[sink].is_finite(), "transport network disconnected");
        for v in 0..node_count {
            if dist[v].is_finite() {
                potential[v] += dist[v];
            }
        }
        // Bottleneck along the shortest path.
        let mut push = total - flow;
        let mut v = sink;
        while v != source {
            let (u, k) = parent[v];
            push = push.min(graph.adj[u][k].cap);
            v = u;
        }
        let mut v = sink;
        while v != source {
            let (u, k) = parent[v];
            let rev = graph.adj[u][k].rev;
            graph.adj[u][k].cap -= push;
            graph.adj[v][rev].cap += push;
            flow_cost += push as f64 * graph.adj[u][k].cost;
            v = u;
        }
        flow += push;
    }

    // Each unit carries g/(m*n) of probability mass.
    flow_cost * g as f64 / (m as f64 * n as f64)
}

/// Max-heap entry ordered by smallest distance first.
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed on distance for a min-heap; node id breaks ties so the
        // order is total.
        other.dist.partial_cmp(&self.dist).unwrap().then_with(|| other.node.cmp(&self.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_cost_zero() {
        let cost = [0.0, 2.0, 2.0, 0.0];
        assert_eq!(uniform_emd(&cost, 2, 2), 0.0);
    }

    #[test]
    fn singleton_pair_is_plain_distance() {
        assert_eq!(uniform_emd(&[5.0], 1, 1), 5.0);
    }

    #[test]
    fn split_mass_case() {
        // X = {0, 2}, Y = {1, 1} on a line: every unit moves distance 1.
        let cost = [1.0, 1.0, 1.0, 1.0];
        assert!((uniform_emd(&cost, 2, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unequal_sizes_fractional_mass() {
        // X = {0}, Y = {0, 4}: half the mass travels 4. EMD = 2.
        let cost = [0.0, 4.0];
        assert!((uniform_emd(&cost, 1, 2) - 2.0).abs() < 1e-12);
        // And the transpose.
        assert!((uniform_emd(&[0.0, 4.0], 2, 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coprime_sizes() {
        // X = {0, 3}, Y = {0, 3, 3}: optimal plan keeps 1/3 at 0 and moves
        // the excess 1/6 from 0 to 3 -> cost 1/2.
        let x = [0.0_f64, 3.0];
        let y = [0.0_f64, 3.0, 3.0];
        let mut cost = Vec::new();
        for a in x {
            for b in y {
                cost.push((a - b).abs());
            }
        }
        assert!((uniform_emd(&cost, 2, 3) - 0.5).abs() < 1e-12);
    }
}
