//! Line-delimited trace files.
//!
//! Header line `{"seed":S,"init_edges":[[a,b],…]}` followed by one
//! action per line: `{"op":"insert","id":I,"nbrs":[…]}` or
//! `{"op":"delete","id":I}`. Serialization is byte-stable so generated
//! files round-trip identically.

use std::fmt::Write as _;

use forgiving_graph::adversary::{Action, Trace};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ParseError {}

pub fn serialize(trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(&format!("{{\"seed\":{},\"init_edges\":[", trace.seed));
    for (i, (a, b)) in trace.init_edges.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "[{a},{b}]");
    }
    out.push_str("]}\n");
    for action in &trace.actions {
        match action {
            Action::Insert { id, neighbors } => {
                let _ = write!(out, "{{\"op\":\"insert\",\"id\":{id},\"nbrs\":[");
                for (i, n) in neighbors.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{n}");
                }
                out.push_str("]}\n");
            }
            Action::Delete { id } => {
                let _ = writeln!(out, "{{\"op\":\"delete\",\"id\":{id}}}");
            }
        }
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, msg: msg.into() }
}

fn get_u64(v: &Value, key: &str, line: usize) -> Result<u64, ParseError> {
    v.get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| err(line, format!("missing or non-integer field \"{key}\"")))
}

pub fn parse(text: &str) -> Result<Trace, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(0, "empty trace file"))?;
    let hv: Value =
        serde_json::from_str(header).map_err(|e| err(hline, format!("bad header: {e}")))?;
    let seed = get_u64(&hv, "seed", hline)?;
    let raw_edges = hv
        .get("init_edges")
        .and_then(Value::as_array)
        .ok_or_else(|| err(hline, "missing \"init_edges\" array"))?;
    let mut init_edges = Vec::new();
    for e in raw_edges {
        let pair = e.as_array().filter(|p| p.len() == 2);
        let (a, b) = pair
            .and_then(|p| Some((p[0].as_u64()?, p[1].as_u64()?)))
            .ok_or_else(|| err(hline, "init_edges entries must be [a,b] integer pairs"))?;
        init_edges.push((a, b));
    }
    let mut actions = Vec::new();
    for (ln, l) in lines {
        let v: Value = serde_json::from_str(l).map_err(|e| err(ln, format!("bad action: {e}")))?;
        let op = v
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| err(ln, "missing \"op\""))?;
        let id = get_u64(&v, "id", ln)?;
        match op {
            "insert" => {
                let nbrs = v
                    .get("nbrs")
                    .and_then(Value::as_array)
                    .ok_or_else(|| err(ln, "insert needs \"nbrs\" array"))?;
                let mut neighbors = Vec::new();
                for n in nbrs {
                    neighbors
                        .push(n.as_u64().ok_or_else(|| err(ln, "nbrs must be integers"))?);
                }
                actions.push(Action::Insert { id, neighbors });
            }
            "delete" => actions.push(Action::Delete { id }),
            other => return Err(err(ln, format!("unknown op \"{other}\""))),
        }
    }
    Ok(Trace { seed, init_edges, actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use forgiving_graph::adversary;

    #[test]
    fn round_trip_is_byte_identical() {
        let t = adversary::random_trace(16, 40, 0.3, 9);
        let s = serialize(&t);
        let back = parse(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(serialize(&back), s);
    }

    #[test]
    fn literal_format() {
        let t = Trace {
            seed: 7,
            init_edges: vec![(0, 1), (0, 2)],
            actions: vec![
                Action::Insert { id: 5, neighbors: vec![1, 2] },
                Action::Delete { id: 5 },
            ],
        };
        let expect = "{\"seed\":7,\"init_edges\":[[0,1],[0,2]]}\n\
                      {\"op\":\"insert\",\"id\":5,\"nbrs\":[1,2]}\n\
                      {\"op\":\"delete\",\"id\":5}\n";
        assert_eq!(serialize(&t), expect);
        assert_eq!(parse(expect).unwrap(), t);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("{\"seed\":1,\"init_edges\":[[0,1]]}\nnot json\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("").unwrap_err();
        assert_eq!(e.line, 0);
        let e = parse("{\"seed\":1}").unwrap_err();
        assert_eq!(e.line, 1);
    }
}
