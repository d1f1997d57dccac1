//! `fgraph`: generate, replay, verify, and benchmark self-healing
//! protocol traces.
//!
//! Exit codes: 0 clean, 1 invariant violation, 2 input/usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use forgiving_graph::adversary::{self, Trace};
use forgiving_graph::netsim::{self, NetSim};
use forgiving_graph::protocol::ForgivingGraph;

use forgiving_graph_cli::runner::{run_trace, CheckLevel, RunOutcome};
use forgiving_graph_cli::{report, trace as tracefmt};

#[derive(Parser)]
#[command(name = "fgraph", about = "Self-healing graph protocol driver", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckArg {
    Step,
    Final,
}

#[derive(clap::Args)]
struct Source {
    /// Replay an existing trace file.
    #[arg(long, conflicts_with = "generator")]
    trace: Option<PathBuf>,
    /// Generate a trace: random | star | max-degree.
    #[arg(long = "gen", value_name = "NAME")]
    generator: Option<String>,
    /// Generator parameters as k=v (n0, steps, p_delete, n).
    #[arg(value_name = "K=V")]
    params: Vec<String>,
    /// RNG seed for generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Report destination (stdout if omitted); the message log goes to
    /// the same path with a `.msgs` suffix.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metric granularity: every step, or final state only.
    #[arg(long, value_enum, default_value = "step")]
    check: CheckArg,
    /// Constant C in the round bound C·(1+⌈log₂d⌉)(1+⌈log₂n⌉).
    #[arg(long, default_value_t = netsim::ROUND_CONST)]
    round_const: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a trace and write the metrics report.
    Run(RunArgs),
    /// Replay with per-step assertions; dump state on first failure.
    Verify(RunArgs),
    /// Sweep deletions over d and n and report the observed round-bound
    /// constant.
    Bench(RunArgs),
    /// Generate a trace file.
    Gen {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct UsageError(String);

fn param_map(params: &[String]) -> Result<std::collections::BTreeMap<String, String>, UsageError> {
    let mut map = std::collections::BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| UsageError(format!("parameter \"{p}\" is not k=v")))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn get<T: std::str::FromStr>(
    map: &std::collections::BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, UsageError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| UsageError(format!("bad value for {key}: \"{v}\""))),
    }
}

fn load_trace(source: &Source) -> Result<Trace, UsageError> {
    if let Some(path) = &source.trace {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        return tracefmt::parse(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())));
    }
    let name = source
        .generator
        .as_deref()
        .ok_or_else(|| UsageError("need --trace PATH or --gen NAME".into()))?;
    let p = param_map(&source.params)?;
    match name {
        "random" => Ok(adversary::random_trace(
            get(&p, "n0", 16)?,
            get(&p, "steps", 100)?,
            get(&p, "p_delete", 0.3)?,
            source.seed,
        )),
        "star" => {
            let n: u64 = get(&p, "n", 9)?;
            if n < 3 {
                return Err(UsageError("star needs n >= 3".into()));
            }
            Ok(adversary::star_attack(n))
        }
        "max-degree" | "max_degree" => Ok(adversary::max_degree_attack(
            get(&p, "n0", 16)?,
            get(&p, "steps", 100)?,
            source.seed,
        )),
        other => Err(UsageError(format!("unknown generator \"{other}\""))),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), UsageError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| UsageError(format!("{}: {e}", path.display()))),
    }
}

fn cmd_run(args: &RunArgs, verify: bool) -> Result<ExitCode, UsageError> {
    let trace = load_trace(&args.source)?;
    let check = if verify || args.check == CheckArg::Step { CheckLevel::Step } else { CheckLevel::Final };
    let outcome: RunOutcome =
        run_trace(&trace, check, args.round_const).map_err(|e| UsageError(e.0))?;
    let rendered = report::render(trace.seed, &outcome.steps);
    emit(&args.out, &rendered)?;
    if let Some(path) = &args.out {
        let log_path = path.with_extension("msgs");
        std::fs::write(&log_path, outcome.log.join("\n") + "\n")
            .map_err(|e| UsageError(format!("{}: {e}", log_path.display())))?;
    }
    let violations = outcome.violation_count();
    if violations > 0 {
        if verify {
            for row in &outcome.steps {
                for v in &row.violations {
                    eprintln!("step {}: {v}", row.step);
                }
            }
            eprintln!("--- message log ({} lines) ---", outcome.log.len());
            for l in &outcome.log {
                eprintln!("{l}");
            }
        } else {
            eprintln!("{violations} violation(s); rerun with `verify` for details");
        }
        return Ok(ExitCode::from(1));
    }
    if verify {
        eprintln!("ok: {} steps, 0 violations", outcome.steps.len() - 1);
    }
    Ok(ExitCode::SUCCESS)
}

/// Star deletions across a (d, n) grid; reports the smallest integer C
/// that covers every observed round count.
fn cmd_bench(args: &RunArgs) -> Result<ExitCode, UsageError> {
    let mut worst = 0.0f64;
    let mut lines = vec![format!("{:>4} {:>5} {:>7} {:>7}", "d", "n", "rounds", "C_obs")];
    for d in [2u64, 4, 8, 16, 32, 64] {
        for n in [8u64, 16, 64, 128, 512] {
            if d + 1 > n {
                continue;
            }
            let mut edges: Vec<(u64, u64)> = (1..=d).map(|i| (0, i)).collect();
            for i in d + 1..n {
                edges.push((1 + (i % d), i));
            }
            let mut g = ForgivingGraph::from_edges(&edges).map_err(|e| UsageError(e.to_string()))?;
            let mut sim = NetSim::new();
            sim.round_const = u64::MAX; // measuring, not enforcing
            let stats = g
                .delete_fix(&mut sim, 0)
                .map_err(|e| UsageError(e.to_string()))?;
            let denom =
                ((1 + netsim::ceil_log2(d)) * (1 + netsim::ceil_log2(n))) as f64;
            let c = stats.rounds as f64 / denom;
            worst = worst.max(c);
            lines.push(format!("{:>4} {:>5} {:>7} {:>7.3}", d, n, stats.rounds, c));
        }
    }
    lines.push(format!("observed C_max = {worst:.3}; frozen ROUND_CONST = {}", netsim::ROUND_CONST));
    emit(&args.out, &(lines.join("\n") + "\n"))?;
    Ok(if worst <= netsim::ROUND_CONST as f64 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args, false),
        Cmd::Verify(args) => cmd_run(args, true),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Gen { source, out } => load_trace(source)
            .and_then(|t| emit(out, &tracefmt::serialize(&t)))
            .map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
