//! Acceptance gate: one test per criterion, each ending in a single
//! PASS line. Criteria 2, 3, 5, 6, and 7 share one replayed trace
//! corpus (100 random + 100 max-degree traces), built once.

use std::sync::OnceLock;

use forgiving_graph::adversary::{self, Action, Trace};
use forgiving_graph::haft::{self, HaftShape};
use forgiving_graph::metrics::{self, bfs_distances, lower_bound_beta};
use forgiving_graph::netsim::{
    ceil_log2, message_bound, round_bound, size_bound, NetSim, RecoveryStats, ROUND_CONST,
};
use forgiving_graph::protocol::{ForgivingGraph, Role};
use forgiving_graph_cli::report;
use forgiving_graph_cli::runner::{run_trace, CheckLevel};
use forgiving_graph_cli::trace as tracefmt;

// ---------------------------------------------------------------------
// Shared corpus
// ---------------------------------------------------------------------

/// Violations found while replaying one trace, tagged by criterion.
#[derive(Default)]
struct TraceFindings {
    degree: Vec<String>,
    stretch: Vec<String>,
    cost: Vec<String>,
    helper: Vec<String>,
    structure: Vec<String>,
    recoveries: Vec<RecoveryStats>,
}

struct Corpus {
    findings: Vec<TraceFindings>,
}

fn replay_checked(trace: &Trace) -> TraceFindings {
    let mut out = TraceFindings::default();
    let mut g = ForgivingGraph::from_edges(&trace.init_edges).expect("valid init");
    let mut sim = NetSim::new();
    for (i, action) in trace.actions.iter().enumerate() {
        match action {
            Action::Insert { id, neighbors } => g.insert(*id, neighbors).expect("valid insert"),
            Action::Delete { id } => {
                let n = g.gprime_count();
                match g.delete_fix(&mut sim, *id) {
                    Err(e) => out.cost.push(format!("step {i}: repair failed: {e}")),
                    Ok(stats) => {
                        let d = stats.degree_d;
                        if stats.messages_total > message_bound(d, n) {
                            out.cost.push(format!(
                                "step {i}: {} messages > bound {}",
                                stats.messages_total,
                                message_bound(d, n)
                            ));
                        }
                        if stats.max_size_ids > size_bound(n) {
                            out.cost.push(format!(
                                "step {i}: message size {} > bound {}",
                                stats.max_size_ids,
                                size_bound(n)
                            ));
                        }
                        if d >= 2 && stats.rounds > round_bound(ROUND_CONST, d, n) {
                            out.cost.push(format!(
                                "step {i}: {} rounds > bound {}",
                                stats.rounds,
                                round_bound(ROUND_CONST, d, n)
                            ));
                        }
                        if stats.helpers_mid_repair_max > 2 {
                            out.helper.push(format!(
                                "step {i}: {} simultaneous helpers on a record",
                                stats.helpers_mid_repair_max
                            ));
                        }
                        if stats.anchored_helpers_max > 1 {
                            out.helper.push(format!("step {i}: multiple anchored helpers"));
                        }
                        out.recoveries.push(stats);
                        // Post-repair structure: connectivity and RT
                        // validity (criterion 7).
                        if !g.current_graph().is_connected() {
                            out.structure.push(format!("step {i}: G disconnected"));
                        }
                        for rt in g.rts() {
                            if let Err(v) = rt.haft.validate() {
                                out.structure.push(format!("step {i}: invalid RT: {v}"));
                            }
                        }
                    }
                }
            }
        }
        // Quiescent degree bound, every step (criterion 2). One helper
        // per record at quiescence holds structurally: a record stores
        // helper state in a single optional slot.
        let view = g.current_graph();
        for p in view.nodes() {
            if view.degree(p) > 3 * g.gprime_degree(p) {
                out.degree.push(format!(
                    "step {i}: deg_G({p}) = {} > 3·{}",
                    view.degree(p),
                    g.gprime_degree(p)
                ));
            }
        }
        // Full all-pairs stretch while the graph is small (criterion 3).
        let n = g.gprime_count();
        if n <= 128 {
            let cap = ceil_log2(n);
            let baseline = g.insert_only_graph();
            let live = g.live_ids();
            for &x in &live {
                let dg = bfs_distances(&view, x);
                let dp = bfs_distances(&baseline, x);
                for &y in &live {
                    if y <= x {
                        continue;
                    }
                    if let (Some(&a), Some(&b)) = (dg.get(&y), dp.get(&y)) {
                        if a > cap * b {
                            out.stretch.push(format!(
                                "step {i}: dist_G({x},{y}) = {a} > {cap}·{b}"
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut findings = Vec::new();
        for seed in 0..100u64 {
            let t = adversary::random_trace(16, 300, 0.4, seed);
            findings.push(replay_checked(&t));
        }
        for seed in 0..100u64 {
            let t = adversary::max_degree_attack(16, 300, seed);
            findings.push(replay_checked(&t));
        }
        Corpus { findings }
    })
}

fn report_criterion(n: u32, name: &str, violations: &[&String]) {
    if violations.is_empty() {
        eprintln!("criterion {n} ({name}): PASS");
    } else {
        for v in violations.iter().take(5) {
            eprintln!("criterion {n} ({name}): {v}");
        }
        eprintln!("criterion {n} ({name}): FAIL ({} violations)", violations.len());
        panic!("criterion {n} ({name}) failed");
    }
}

// ---------------------------------------------------------------------
// Criterion 1: haft laws
// ---------------------------------------------------------------------

/// Independent shape oracle: a haft on l leaves is the largest complete
/// tree holding at least half the leaves joined with the haft of the
/// rest.
fn oracle_shape(l: u64) -> HaftShape {
    assert!(l >= 1);
    if l.is_power_of_two() {
        return HaftShape::Complete(l);
    }
    let left = 1u64 << l.ilog2();
    HaftShape::Join(Box::new(HaftShape::Complete(left)), Box::new(oracle_shape(l - left)))
}

#[test]
fn criterion_1_haft_laws() {
    let mut violations: Vec<String> = Vec::new();
    for l in 1..1024u64 {
        let labels: Vec<u64> = (0..l).collect();
        let h = haft::make_haft(&labels).unwrap();
        if h.shape() != oracle_shape(l) {
            violations.push(format!("shape({l}) differs from oracle"));
        }
        if u64::from(h.depth()) != ceil_log2(l) {
            violations.push(format!("depth({l}) = {} != ⌈log₂⌉", h.depth()));
        }
        let stripped = h.strip();
        let sizes: Vec<u64> = stripped.forest.iter().map(|t| t.leaf_count()).collect();
        if sizes != haft::binary_decomposition(l).unwrap() {
            violations.push(format!("strip sizes for {l}: {sizes:?}"));
        }
        if stripped.removed.len() as u32 != l.count_ones() - 1 {
            violations.push(format!("strip removals for {l}: {}", stripped.removed.len()));
        }
        if h.validate().is_err() {
            violations.push(format!("make_haft({l}) invalid"));
        }
    }
    for a in 1..=256u64 {
        for b in 1..=256u64 {
            let mut pool = haft::SparePool::new((0..64u64).map(|i| 1_000_000 + i).collect());
            let ha = haft::make_haft(&(0..a).collect::<Vec<_>>()).unwrap();
            let hb = haft::make_haft(&(a..a + b).collect::<Vec<_>>()).unwrap();
            let merged = haft::merge(&[ha, hb], &mut pool).unwrap();
            if merged.shape() != oracle_shape(a + b) {
                violations.push(format!("merge({a},{b}) shape differs"));
            }
        }
    }
    let refs: Vec<&String> = violations.iter().collect();
    report_criterion(1, "haft laws", &refs);
}

// ---------------------------------------------------------------------
// Criteria 2, 3, 5, 6, 7: shared corpus sweeps
// ---------------------------------------------------------------------

#[test]
fn criterion_2_degree_bound() {
    let c = corpus();
    let v: Vec<&String> = c.findings.iter().flat_map(|f| &f.degree).collect();
    report_criterion(2, "degree bound", &v);
}

#[test]
fn criterion_3_stretch_bound() {
    let c = corpus();
    let v: Vec<&String> = c.findings.iter().flat_map(|f| &f.stretch).collect();
    report_criterion(3, "stretch bound", &v);
}

#[test]
fn criterion_5_message_bounds() {
    let c = corpus();
    let v: Vec<&String> = c.findings.iter().flat_map(|f| &f.cost).collect();
    let recoveries: usize = c.findings.iter().map(|f| f.recoveries.len()).sum();
    assert!(recoveries > 1000, "corpus exercised only {recoveries} repairs");
    report_criterion(5, "message/round/size bounds", &v);
}

#[test]
fn criterion_6_helper_count() {
    let c = corpus();
    let v: Vec<&String> = c.findings.iter().flat_map(|f| &f.helper).collect();
    report_criterion(6, "helper count", &v);
}

#[test]
fn criterion_7_connectivity_and_rt_validity() {
    let c = corpus();
    let v: Vec<&String> = c.findings.iter().flat_map(|f| &f.structure).collect();
    report_criterion(7, "connectivity + RT validity", &v);
}

// ---------------------------------------------------------------------
// Criterion 4: star attack quantitative
// ---------------------------------------------------------------------

#[test]
fn criterion_4_star_attack() {
    let t = adversary::star_attack(257);
    let out = run_trace(&t, CheckLevel::Step, ROUND_CONST).unwrap();
    let mut violations: Vec<String> = Vec::new();
    if out.violation_count() > 0 {
        violations.push(format!("{} run violations", out.violation_count()));
    }
    let rts = out.graph.rts();
    if rts.len() != 1 {
        violations.push(format!("{} RTs instead of 1", rts.len()));
    } else {
        let expect = haft::make_haft(&(0..256u64).collect::<Vec<_>>()).unwrap();
        if rts[0].haft.shape() != expect.shape() {
            violations.push("RT shape is not the 256-leaf haft".into());
        }
        let helpers = rts[0].refs.iter().filter(|r| r.role == Role::Helper).count();
        if helpers != 255 {
            violations.push(format!("{helpers} helpers instead of 255"));
        }
    }
    let view = out.graph.current_graph();
    for p in view.nodes() {
        if view.degree(p) > 3 {
            violations.push(format!("survivor {p} has degree {}", view.degree(p)));
        }
    }
    let stretch = metrics::stretch_max(&out.graph);
    if !(4.0..=8.0).contains(&stretch) {
        violations.push(format!("stretch {stretch} outside [4, 8]"));
    }
    let beta = lower_bound_beta(3.0, 257);
    assert!((beta - 4.0).abs() < 1e-12);
    if stretch / beta > 2.0 {
        violations.push(format!("stretch/lower-bound ratio {} > 2", stretch / beta));
    }
    let refs: Vec<&String> = violations.iter().collect();
    report_criterion(4, "star attack quantitative", &refs);
}

// ---------------------------------------------------------------------
// Criterion 8: determinism
// ---------------------------------------------------------------------

#[test]
fn criterion_8_determinism() {
    let mut violations: Vec<String> = Vec::new();
    let traces = [adversary::random_trace(16, 120, 0.4, 99),
        adversary::star_attack(33),
        adversary::max_degree_attack(12, 60, 5)];
    for (i, t) in traces.iter().enumerate() {
        if tracefmt::serialize(t) != tracefmt::serialize(&tracefmt::parse(&tracefmt::serialize(t)).unwrap()) {
            violations.push(format!("trace {i}: serialization not stable"));
        }
        let a = run_trace(t, CheckLevel::Step, ROUND_CONST).unwrap();
        let b = run_trace(t, CheckLevel::Step, ROUND_CONST).unwrap();
        if report::render(t.seed, &a.steps) != report::render(t.seed, &b.steps) {
            violations.push(format!("trace {i}: reports differ between replays"));
        }
        if a.log != b.log {
            violations.push(format!("trace {i}: message logs differ between replays"));
        }
        if a.log.is_empty() {
            violations.push(format!("trace {i}: empty message log"));
        }
    }
    let refs: Vec<&String> = violations.iter().collect();
    report_criterion(8, "determinism", &refs);
}
