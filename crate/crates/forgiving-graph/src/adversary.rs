//! Adversarial workload generation: seeded random churn, the star
//! attack, and a degree-targeting attack that always kills the busiest
//! live processor.

use alloc::vec::Vec;

use crate::netsim::NetSim;
use crate::protocol::{ForgivingGraph, ProcessorId};

/// One adversary step: a single insertion or deletion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Insert { id: ProcessorId, neighbors: Vec<ProcessorId> },
    Delete { id: ProcessorId },
}

/// A reproducible workload: seed, starting graph, and the action list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub seed: u64,
    pub init_edges: Vec<(ProcessorId, ProcessorId)>,
    pub actions: Vec<Action>,
}

/// SplitMix64: tiny, well-mixed, and fully specified, so traces are
/// bit-reproducible anywhere.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in 0..bound (bound > 0), by rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Bernoulli with probability p (clamped to [0,1]).
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        if p >= 1.0 {
            return true;
        }
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) < p
    }
}

/// Random connected start on ids 0..n0: a uniform-attachment spanning
/// tree plus about n0/2 extra edges.
fn random_init(rng: &mut SplitMix64, n0: u64) -> Vec<(ProcessorId, ProcessorId)> {
    let mut edges = Vec::new();
    for i in 1..n0 {
        edges.push((rng.below(i), i));
    }
    let extras = n0 / 2;
    for _ in 0..extras {
        let a = rng.below(n0);
        let b = rng.below(n0);
        if a != b && !edges.contains(&(a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges
}

/// Seeded random churn: each step deletes a uniform live processor with
/// probability `p_delete` (never the last one) and otherwise inserts a
/// fresh processor wired to 1..4 distinct live neighbors.
pub fn random_trace(n0: u64, steps: u64, p_delete: f64, seed: u64) -> Trace {
    let mut rng = SplitMix64::new(seed);
    let init_edges = random_init(&mut rng, n0.max(2));
    let mut live: Vec<ProcessorId> = (0..n0.max(2)).collect();
    let mut next_id = n0.max(2);
    let mut actions = Vec::new();
    for _ in 0..steps {
        let delete = rng.chance(p_delete) && live.len() > 1;
        if delete {
            let idx = rng.below(live.len() as u64) as usize;
            let id = live.swap_remove(idx);
            actions.push(Action::Delete { id });
        } else if live.len() <= 1 && p_delete >= 1.0 {
            // Pure-deletion run exhausted: stop rather than grow.
            break;
        } else {
            let want = 1 + rng.below(3.min(live.len() as u64)) as usize;
            let mut neighbors = Vec::new();
            while neighbors.len() < want {
                let cand = live[rng.below(live.len() as u64) as usize];
                if !neighbors.contains(&cand) {
                    neighbors.push(cand);
                }
            }
            neighbors.sort_unstable();
            let id = next_id;
            next_id += 1;
            live.push(id);
            actions.push(Action::Insert { id, neighbors });
        }
    }
    Trace { seed, init_edges, actions }
}

/// The star attack: center 0, spokes 1..n, one action deleting the
/// center. The repair must knit all n−1 spokes into a single RT.
pub fn star_attack(n: u64) -> Trace {
    debug_assert!(n >= 3);
    Trace {
        seed: 0,
        init_edges: (1..n).map(|i| (0, i)).collect(),
        actions: alloc::vec![Action::Delete { id: 0 }],
    }
}

/// Degree-targeting attack: alternates fresh insertions with deleting
/// the live processor of maximum overlay degree (ties to the smallest
/// id). Picking the victim requires knowing each repair's outcome, so
/// the generator replays the protocol internally while emitting actions.
pub fn max_degree_attack(n0: u64, steps: u64, seed: u64) -> Trace {
    let mut rng = SplitMix64::new(seed);
    let init_edges = random_init(&mut rng, n0.max(2));
    let mut g = ForgivingGraph::from_edges(&init_edges).expect("generated init is valid");
    let mut sim = NetSim::new();
    let mut next_id = n0.max(2);
    let mut actions = Vec::new();
    for step in 0..steps {
        let live = g.live_ids();
        let delete_turn = step % 2 == 1 && live.len() > 1;
        if delete_turn {
            let view = g.current_graph();
            let victim = live
                .iter()
                .copied()
                .max_by_key(|p| (view.degree(*p), core::cmp::Reverse(*p)))
                .unwrap();
            g.delete_fix(&mut sim, victim).expect("internal replay");
            actions.push(Action::Delete { id: victim });
        } else {
            let want = 1 + rng.below(3.min(live.len() as u64)) as usize;
            let mut neighbors = Vec::new();
            while neighbors.len() < want {
                let cand = live[rng.below(live.len() as u64) as usize];
                if !neighbors.contains(&cand) {
                    neighbors.push(cand);
                }
            }
            neighbors.sort_unstable();
            let id = next_id;
            next_id += 1;
            g.insert(id, &neighbors).expect("internal replay");
            actions.push(Action::Insert { id, neighbors });
        }
    }
    Trace { seed, init_edges, actions }
}
