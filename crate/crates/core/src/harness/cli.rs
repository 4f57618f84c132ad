//! `qpv-sim <run|attack|check-theorems|diagram>`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 internal error
//! (causality violations included).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{aggregate, parse_scenario, run_one, run_rounds, HarnessError, RoundResult, Scenario};
use crate::protocol::{ActorId, RecordKind};

#[derive(Debug, Parser)]
#[command(name = "qpv-sim", version, about = "Quantum position verification in 1+1D Minkowski spacetime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario with an honest prover.
    Run(Common),
    /// Run the scenario against the configured dishonest strategy.
    Attack(Common),
    /// Print the geometric security predicates for the scenario.
    CheckTheorems(Common),
    /// Emit worldline and message segments of round 0 for plotting.
    Diagram(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file of `key = value` lines; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print every round's trace before the report.
    #[arg(long)]
    trace: bool,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Internal(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let mut scenario = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_scenario(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => Scenario::default(),
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn write_traces(out: &mut dyn Write, results: &[RoundResult]) -> std::io::Result<()> {
    for r in results {
        write!(out, "{}", r.trace)?;
    }
    Ok(())
}

/// One `segment x1 t1 x2 t2 label` line per worldline and per message.
pub fn diagram_lines(result: &RoundResult) -> Vec<String> {
    let trace = &result.trace;
    let t_end = trace.records().iter().map(|r| r.t).fold(0.0, f64::max);
    let mut actors: Vec<(ActorId, f64)> = Vec::new();
    for r in trace.records() {
        if let crate::protocol::Party::Actor(a) = r.party {
            if !actors.iter().any(|(b, _)| *b == a) {
                actors.push((a, r.x));
            }
        }
    }
    actors.sort_by_key(|(a, _)| *a);
    let mut lines: Vec<String> = actors
        .iter()
        .map(|(a, x)| format!("segment {x:.9} 0.000000000 {x:.9} {t_end:.9} worldline:{a}"))
        .collect();
    for r in trace.records() {
        let Some(m) = r.message() else { continue };
        if matches!(r.kind, RecordKind::Send | RecordKind::Reply) {
            lines.push(format!(
                "segment {:.9} {:.9} {:.9} {:.9} message:{}:{}->{}:{}",
                m.emit.x, m.emit.t, m.arrive.x, m.arrive.t, m.id, m.from, m.to, m.payload
            ));
        }
    }
    lines
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Internal(format!("write failed: {e}"));
    match cli.command {
        Command::Run(common) => report(out, &common, false),
        Command::Attack(common) => report(out, &common, true),
        Command::CheckTheorems(common) => {
            let scenario = load(&common)?;
            let mut text = String::from("mode = check-theorems\n");
            for (k, v) in scenario.entries() {
                text.push_str(&format!("scenario.{k} = {v}\n"));
            }
            text.push_str(&super::theorem_report(&scenario).to_string());
            out.write_all(text.as_bytes()).map_err(io)
        }
        Command::Diagram(common) => {
            let scenario = load(&common)?;
            let dishonest = scenario.strategy.is_some();
            let result = run_one(&scenario, dishonest, 0)?;
            for line in diagram_lines(&result) {
                writeln!(out, "{line}").map_err(io)?;
            }
            let results = [result];
            if common.trace {
                write_traces(out, &results).map_err(io)?;
            }
            let single = Scenario { rounds: 1, ..scenario };
            write!(out, "{}", aggregate(&single, dishonest, &results)?).map_err(io)
        }
    }
}

fn report(out: &mut dyn Write, common: &Common, dishonest: bool) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Internal(format!("write failed: {e}"));
    let scenario = load(common)?;
    let results = run_rounds(&scenario, dishonest)?;
    if common.trace {
        write_traces(out, &results).map_err(io)?;
    }
    write!(out, "{}", aggregate(&scenario, dishonest, &results)?).map_err(io)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return 1;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            2
        }
    }
}
