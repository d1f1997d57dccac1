//! Health metrics for the healed overlay: degree blowup, distance
//! stretch, connectivity, and the information-theoretic stretch floor.
//!
//! All distances are processor-level hop counts. Stretch compares the
//! live overlay G against the insert-only graph G′, whose paths may run
//! through deleted processors — that is the benchmark the protocol is
//! measured against.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::protocol::{ForgivingGraph, GraphView, ProcessorId};

/// Outcome of one full metrics pass over a graph state.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// max over live processors of deg_G(p) / deg_G′(p).
    pub degree_ratio_max: f64,
    /// max over live pairs of dist_G(x,y) / dist_G′(x,y); 1.0 when no
    /// pair qualifies.
    pub stretch_max: f64,
    pub connected: bool,
    /// Invariant or bound violations, one line each.
    pub violations: Vec<String>,
}

/// Single-source hop distances by breadth-first search.
pub fn bfs_distances(view: &GraphView, src: ProcessorId) -> BTreeMap<ProcessorId, u64> {
    let mut dist = BTreeMap::new();
    if !view.adj.contains_key(&src) {
        return dist;
    }
    dist.insert(src, 0);
    let mut queue = VecDeque::new();
    queue.push_back(src);
    while let Some(p) = queue.pop_front() {
        let dp = dist[&p];
        for q in view.neighbors(p) {
            if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(q) {
                e.insert(dp + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// Largest deg_G(p) / deg_G′(p) over live processors (0.0 if none).
pub fn degree_ratio_max(g: &ForgivingGraph) -> f64 {
    let view = g.current_graph();
    let mut worst = 0.0f64;
    for p in view.nodes() {
        let dp = g.gprime_degree(p);
        if dp == 0 {
            continue;
        }
        let ratio = view.degree(p) as f64 / dp as f64;
        if ratio > worst {
            worst = ratio;
        }
    }
    worst
}

/// Largest dist_G(x,y) / dist_G′(x,y) over live pairs reachable in both
/// graphs. Returns 1.0 when no pair qualifies (fewer than two live
/// processors, or nothing reachable).
pub fn stretch_max(g: &ForgivingGraph) -> f64 {
    let live: BTreeSet<ProcessorId> = g.live_ids().into_iter().collect();
    let current = g.current_graph();
    let baseline = g.insert_only_graph();
    let mut worst = 1.0f64;
    for &x in &live {
        let dg = bfs_distances(&current, x);
        let dp = bfs_distances(&baseline, x);
        for &y in live.range((
            core::ops::Bound::Excluded(x),
            core::ops::Bound::Unbounded,
        )) {
            let (Some(&a), Some(&b)) = (dg.get(&y), dp.get(&y)) else { continue };
            if b == 0 {
                continue;
            }
            let ratio = a as f64 / b as f64;
            if ratio > worst {
                worst = ratio;
            }
        }
    }
    worst
}

/// Lower bound on worst-case stretch for any protocol keeping degree
/// increase ≤ α on graphs of n nodes: ½ · log₂(n−1) / log₂(α−1).
pub fn lower_bound_beta(alpha: f64, n: u64) -> f64 {
    if n < 3 || alpha <= 2.0 {
        return 0.0;
    }
    0.5 * libm::log2((n - 1) as f64) / libm::log2(alpha - 1.0)
}

/// Run the full health check: invariants, connectivity, degree ratio
/// against the factor-3 bound, and stretch against the logarithmic bound.
pub fn check_state(g: &ForgivingGraph) -> MetricsReport {
    let mut violations = g.check_invariants();
    let view = g.current_graph();
    let connected = view.is_connected();
    if !connected && !violations.iter().any(|v| v == "G disconnected") {
        violations.push("G disconnected".into());
    }
    let dr = degree_ratio_max(g);
    if dr > 3.0 {
        violations.push(format!("degree ratio {dr} exceeds 3"));
    }
    let sm = stretch_max(g);
    let n = g.gprime_count();
    if n >= 2 {
        let cap = 4.0 * (1.0 + libm::log2(n as f64));
        if sm > cap {
            violations.push(format!("stretch {sm} exceeds {cap}"));
        }
    }
    MetricsReport { degree_ratio_max: dr, stretch_max: sm, connected, violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::NetSim;
    use crate::protocol::ForgivingGraph;

    #[test]
    fn bfs_on_path() {
        let g = ForgivingGraph::from_edges(&[(1, 2), (2, 3), (3, 4)]).unwrap();
        let d = bfs_distances(&g.current_graph(), 1);
        assert_eq!(d[&4], 3);
        assert_eq!(d[&1], 0);
    }

    #[test]
    fn clean_graph_reports_unit_metrics() {
        let g = ForgivingGraph::from_edges(&[(1, 2), (2, 3), (1, 3)]).unwrap();
        let r = check_state(&g);
        assert!(r.connected);
        assert_eq!(r.stretch_max, 1.0);
        assert_eq!(r.degree_ratio_max, 1.0);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn star_deletion_metrics() {
        let mut g = ForgivingGraph::from_edges(&(1..9).map(|i| (0, i)).collect::<Vec<_>>()).unwrap();
        let mut s = NetSim::new();
        g.delete_fix(&mut s, 0).unwrap();
        let r = check_state(&g);
        assert!(r.connected);
        assert!(r.degree_ratio_max <= 3.0);
        // Former spokes at G′ distance 2 are now joined through the RT.
        assert!(r.stretch_max >= 1.0);
        assert!(r.violations.is_empty(), "{:?}", r.violations);
    }

    #[test]
    fn lower_bound_values() {
        // α = 3 halves the log: β ≥ ½ log₂(n−1).
        let b = lower_bound_beta(3.0, 257);
        assert!((b - 4.0).abs() < 1e-9);
        assert_eq!(lower_bound_beta(2.0, 100), 0.0);
        assert_eq!(lower_bound_beta(3.0, 2), 0.0);
    }

    #[test]
    fn stretch_uses_insert_only_baseline() {
        // Path 1-2-3; delete 2. G′ still offers dist(1,3) = 2 through the
        // dead node, while G joins 1 and 3 directly via the RT.
        let mut g = ForgivingGraph::from_edges(&[(1, 2), (2, 3)]).unwrap();
        let mut s = NetSim::new();
        g.delete_fix(&mut s, 2).unwrap();
        let r = check_state(&g);
        assert!(r.connected);
        assert!(r.stretch_max <= 1.0);
    }
}
