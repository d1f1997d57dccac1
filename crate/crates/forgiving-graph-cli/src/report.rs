//! Report rendering: one summary object plus a per-step array, with a
//! fixed key order so identical runs produce identical bytes.

use std::fmt::Write as _;

/// One row per trace step (step 0 is the initial graph).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub step: u64,
    pub n_gprime: u64,
    pub degree_ratio_max: f64,
    pub stretch_max: f64,
    pub messages_total: u64,
    pub rounds: u64,
    pub violations: Vec<String>,
}

fn num(x: f64) -> String {
    // Shortest round-trip form; integers print without a fraction.
    format!("{x}")
}

fn row_json(r: &StepRow) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{{\"step\":{},\"n_gprime\":{},\"degree_ratio_max\":{},\"stretch_max\":{},\"messages_total\":{},\"rounds\":{},\"violations\":[",
        r.step,
        r.n_gprime,
        num(r.degree_ratio_max),
        num(r.stretch_max),
        r.messages_total,
        r.rounds,
    );
    for (i, v) in r.violations.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{}", serde_json::to_string(v).unwrap());
    }
    s.push_str("]}");
    s
}

/// Full report: summary (worst-case row over the run plus the seed) and
/// the step array.
pub fn render(seed: u64, steps: &[StepRow]) -> String {
    let last = steps.last();
    let summary = StepRow {
        step: last.map(|r| r.step).unwrap_or(0),
        n_gprime: last.map(|r| r.n_gprime).unwrap_or(0),
        degree_ratio_max: steps.iter().map(|r| r.degree_ratio_max).fold(0.0, f64::max),
        stretch_max: steps.iter().map(|r| r.stretch_max).fold(0.0, f64::max),
        messages_total: steps.iter().map(|r| r.messages_total).sum(),
        rounds: steps.iter().map(|r| r.rounds).sum(),
        violations: steps.iter().flat_map(|r| r.violations.iter().cloned()).collect(),
    };
    let mut out = String::new();
    let _ = write!(out, "{{\"seed\":{seed},\"summary\":{},\"steps\":[", row_json(&summary));
    for (i, r) in steps.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&row_json(r));
    }
    out.push_str("]}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_key_order_and_bytes() {
        let rows = vec![StepRow {
            step: 0,
            n_gprime: 3,
            degree_ratio_max: 1.0,
            stretch_max: 1.0,
            messages_total: 0,
            rounds: 0,
            violations: vec![],
        }];
        let r = render(9, &rows);
        assert_eq!(
            r,
            "{\"seed\":9,\"summary\":{\"step\":0,\"n_gprime\":3,\"degree_ratio_max\":1,\"stretch_max\":1,\"messages_total\":0,\"rounds\":0,\"violations\":[]},\"steps\":[{\"step\":0,\"n_gprime\":3,\"degree_ratio_max\":1,\"stretch_max\":1,\"messages_total\":0,\"rounds\":0,\"violations\":[]}]}\n"
        );
        assert_eq!(render(9, &rows), r);
    }

    #[test]
    fn summary_takes_worst_case() {
        let mk = |step, dr, sm, msgs| StepRow {
            step,
            n_gprime: 4,
            degree_ratio_max: dr,
            stretch_max: sm,
            messages_total: msgs,
            rounds: 1,
            violations: vec![],
        };
        let r = render(0, &[mk(0, 1.0, 1.0, 0), mk(1, 2.5, 3.0, 40)]);
        let v: serde_json::Value = serde_json::from_str(&r).unwrap();
        assert_eq!(v["summary"]["degree_ratio_max"], 2.5);
        assert_eq!(v["summary"]["stretch_max"], 3.0);
        assert_eq!(v["summary"]["messages_total"], 40);
    }
}
