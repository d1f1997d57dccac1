//! Replay driver: feed a trace through the protocol and the message
//! simulator, collecting per-step rows and the message log.

use forgiving_graph::adversary::{Action, Trace};
use forgiving_graph::metrics;
use forgiving_graph::netsim::{NetSim, RecoveryStats};
use forgiving_graph::protocol::{ForgivingGraph, ProtocolError};

use crate::report::StepRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckLevel {
    /// Full metrics and invariant sweep after every action.
    Step,
    /// Cost accounting every step; metrics only on the final state.
    Final,
}

/// Input problems that make the trace unrunnable (exit code 2 domain).
#[derive(Debug)]
pub struct RunError(pub String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for RunError {}

#[derive(Debug)]
pub struct RunOutcome {
    pub steps: Vec<StepRow>,
    pub log: Vec<String>,
    pub graph: ForgivingGraph,
    pub recoveries: Vec<RecoveryStats>,
}

impl RunOutcome {
    pub fn violation_count(&self) -> usize {
        self.steps.iter().map(|s| s.violations.len()).sum()
    }
}

fn metrics_row(g: &ForgivingGraph, step: u64, stats: Option<&RecoveryStats>) -> StepRow {
    let r = metrics::check_state(g);
    StepRow {
        step,
        n_gprime: g.gprime_count(),
        degree_ratio_max: r.degree_ratio_max,
        stretch_max: r.stretch_max,
        messages_total: stats.map(|s| s.messages_total).unwrap_or(0),
        rounds: stats.map(|s| s.rounds).unwrap_or(0),
        violations: r.violations,
    }
}

fn bare_row(g: &ForgivingGraph, step: u64, stats: Option<&RecoveryStats>) -> StepRow {
    StepRow {
        step,
        n_gprime: g.gprime_count(),
        degree_ratio_max: 0.0,
        stretch_max: 0.0,
        messages_total: stats.map(|s| s.messages_total).unwrap_or(0),
        rounds: stats.map(|s| s.rounds).unwrap_or(0),
        violations: Vec::new(),
    }
}

pub fn run_trace(
    trace: &Trace,
    check: CheckLevel,
    round_const: u64,
) -> Result<RunOutcome, RunError> {
    let mut g = ForgivingGraph::from_edges(&trace.init_edges)
        .map_err(|e| RunError(format!("bad initial graph: {e}")))?;
    let mut sim = NetSim::new();
    sim.round_const = round_const;
    let mut steps = Vec::new();
    let mut recoveries = Vec::new();
    let total = trace.actions.len() as u64;

    let want_metrics = |step: u64| check == CheckLevel::Step || step == total;
    steps.push(if want_metrics(0) { metrics_row(&g, 0, None) } else { bare_row(&g, 0, None) });

    for (i, action) in trace.actions.iter().enumerate() {
        let step = i as u64 + 1;
        let mut stats = None;
        let mut extra_violation = None;
        match action {
            Action::Insert { id, neighbors } => {
                g.insert(*id, neighbors)
                    .map_err(|e| RunError(format!("step {step}: {e}")))?;
            }
            Action::Delete { id } => match g.delete_fix(&mut sim, *id) {
                Ok(s) => {
                    recoveries.push(s.clone());
                    stats = Some(s);
                }
                Err(
                    e @ (ProtocolError::UnknownProcessor(_) | ProtocolError::DeadProcessor(_)),
                ) => return Err(RunError(format!("step {step}: {e}"))),
                Err(e) => extra_violation = Some(format!("step {step}: {e}")),
            },
        }
        let mut row = if want_metrics(step) {
            metrics_row(&g, step, stats.as_ref())
        } else {
            bare_row(&g, step, stats.as_ref())
        };
        row.violations.extend(extra_violation);
        steps.push(row);
    }

    Ok(RunOutcome { steps, log: sim.log().to_vec(), graph: g, recoveries })
}
