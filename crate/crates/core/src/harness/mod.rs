//! Scenario configuration, verdicts, Monte Carlo runs and reports.

pub mod cli;
mod scenario;
mod verdict;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{classify_pattern, epr_pairs_used, CommPattern, Strategy};
use crate::protocol::{run_round, ProtocolError, RoundTrace, Scheme};
use crate::spacetime::{theorem1_insecure, theorem2_holds, theorem3_holds, theorem4_holds, Event, Geometry};

pub use scenario::{parse_scenario, ConfigError, Scenario};
pub use verdict::{judge, Reason, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("cannot aggregate an empty set of rounds")]
    Empty,
}

impl HarnessError {
    pub fn is_causality_violation(&self) -> bool {
        matches!(self, HarnessError::Protocol(e) if e.is_causality_violation())
    }
}

pub fn verdict(trace: &RoundTrace, scenario: &Scenario) -> Result<Verdict, HarnessError> {
    judge(trace, &scenario.geometry, scenario.epsilon)
}

/// One simulated round together with its assessment.
#[derive(Debug, Clone)]
pub struct RoundResult {
    /// Includes the closing verdict record.
    pub trace: RoundTrace,
    pub verdict: Verdict,
    pub pattern: CommPattern,
    pub epr_pairs: u32,
}

pub fn run_one(scenario: &Scenario, dishonest: bool, round: u64) -> Result<RoundResult, HarnessError> {
    let mut trace = run_round(&scenario.setup(dishonest), round)?;
    let verdict = verdict(&trace, scenario)?;
    trace.push(verdict.record());
    Ok(RoundResult { pattern: classify_pattern(&trace), epr_pairs: epr_pairs_used(&trace), trace, verdict })
}

/// Runs every round of the scenario in parallel; results are in round order.
pub fn run_rounds(scenario: &Scenario, dishonest: bool) -> Result<Vec<RoundResult>, HarnessError> {
    if dishonest && scenario.strategy.is_none() {
        return Err(ConfigError::Invalid { key: "strategy", message: "attack needs a dishonest strategy".into() }.into());
    }
    (0..scenario.rounds).into_par_iter().map(|r| run_one(scenario, dishonest, r)).collect()
}

/// Geometric security predicates for the event layout of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoremReport {
    pub theorem1_insecure: bool,
    pub theorem2: bool,
    pub theorem3: bool,
    pub theorem4: bool,
}

/// Encoding and interception events of a scheme, as `(encode, intercept)`.
///
/// Type (i)/(ii) encode at the verifiers at `t = 0` and are intercepted in
/// flight at `t_p - delta`. The teleport schemes inject the secret on the
/// slice through V1's teleportation, so only systems on that slice carry it.
pub fn layout(g: &Geometry, scheme: Scheme, teleport_time_offset: f64) -> ((Event, Event), (Event, Event)) {
    if scheme.is_teleport() {
        let t = g.t_p() + teleport_time_offset;
        (
            (Event::new(g.x_v1(), t), Event::new(g.x_v2(), g.t_p())),
            (Event::new(g.x_p1(), t), Event::new(g.x_p2(), t)),
        )
    } else {
        ((Event::new(g.x_v1(), 0.0), Event::new(g.x_v2(), 0.0)), g.interception_events())
    }
}

pub fn theorem_report(scenario: &Scenario) -> TheoremReport {
    let g = &scenario.geometry;
    let p = g.prover_event();
    let (encode, (ia, ib)) = layout(g, scenario.scheme, scenario.teleport_time_offset);
    let emissions = (Event::new(g.x_v1(), 0.0), Event::new(g.x_v2(), 0.0));
    TheoremReport {
        theorem1_insecure: theorem1_insecure(g, &ia, &ib),
        theorem2: theorem2_holds((&emissions.0, &emissions.1), &p),
        theorem3: theorem3_holds((&ia, &ib), &p),
        theorem4: theorem4_holds((&encode.0, &encode.1), &p),
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theorem1_insecure = {}", self.theorem1_insecure)?;
        writeln!(f, "theorem2 = {}", self.theorem2)?;
        writeln!(f, "theorem3 = {}", self.theorem3)?;
        writeln!(f, "theorem4 = {}", self.theorem4)
    }
}

/// How a dishonest run bears on the claim that the teleport schemes resist
/// relabeling adversaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimStatus {
    /// No round was accepted.
    Supported,
    /// Every round was accepted.
    Contradicted,
    Inconclusive,
}

impl fmt::Display for ClaimStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClaimStatus::Supported => "supported",
            ClaimStatus::Contradicted => "contradicted",
            ClaimStatus::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalStats {
    pub count: u64,
    pub mean: f64,
    pub max: f64,
}

impl ArrivalStats {
    fn of(times: impl Iterator<Item = f64>) -> Option<Self> {
        let (count, sum, max) = times.fold((0u64, 0.0, f64::NEG_INFINITY), |(n, s, m), t| (n + 1, s + t, m.max(t)));
        (count > 0).then(|| ArrivalStats { count, mean: sum / count as f64, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: &'static str,
    pub scenario: Scenario,
    pub rounds: u64,
    pub accepted: u64,
    pub reasons: BTreeMap<Reason, u64>,
    pub arrival_v1: Option<ArrivalStats>,
    pub arrival_v2: Option<ArrivalStats>,
    pub latest_decision: f64,
    pub patterns: BTreeMap<CommPattern, u64>,
    pub max_epr_pairs: u32,
    pub theorems: TheoremReport,
    /// Present for dishonest runs against a teleport scheme.
    pub security_claim: Option<ClaimStatus>,
}

impl RunReport {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.rounds as f64
    }

    pub fn reason_count(&self, r: Reason) -> u64 {
        self.reasons.get(&r).copied().unwrap_or(0)
    }

    pub fn pattern_count(&self, p: CommPattern) -> u64 {
        self.patterns.get(&p).copied().unwrap_or(0)
    }
}

/// Deterministic fold of round results in the order given.
pub fn aggregate(scenario: &Scenario, dishonest: bool, results: &[RoundResult]) -> Result<RunReport, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut reasons: BTreeMap<Reason, u64> = Reason::ALL.iter().map(|r| (*r, 0)).collect();
    let mut patterns: BTreeMap<CommPattern, u64> = CommPattern::ALL.iter().map(|p| (*p, 0)).collect();
    for r in results {
        *reasons.entry(r.verdict.reason).or_default() += 1;
        *patterns.entry(r.pattern).or_default() += 1;
    }
    let rounds = results.len() as u64;
    let accepted = reasons[&Reason::Ok];
    let strategy: Option<Strategy> = if dishonest { scenario.strategy } else { None };
    let security_claim = (strategy.is_some() && scenario.scheme.is_teleport()).then_some(match accepted {
        0 => ClaimStatus::Supported,
        n if n == rounds => ClaimStatus::Contradicted,
        _ => ClaimStatus::Inconclusive,
    });
    Ok(RunReport {
        mode: if dishonest { "attack" } else { "run" },
        scenario: *scenario,
        rounds,
        accepted,
        reasons,
        arrival_v1: ArrivalStats::of(results.iter().filter_map(|r| r.verdict.arrival_v1)),
        arrival_v2: ArrivalStats::of(results.iter().filter_map(|r| r.verdict.arrival_v2)),
        latest_decision: results.iter().map(|r| r.verdict.decided_at.t).fold(f64::NEG_INFINITY, f64::max),
        patterns,
        max_epr_pairs: results.iter().map(|r| r.epr_pairs).max().unwrap_or(0),
        theorems: theorem_report(scenario),
        security_claim,
    })
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "mode = {}", self.mode);
        for (k, v) in self.scenario.entries() {
            let _ = writeln!(out, "scenario.{k} = {v}");
        }
        let _ = writeln!(out, "rounds = {}", self.rounds);
        let _ = writeln!(out, "accepted = {}", self.accepted);
        let _ = writeln!(out, "acceptance_rate = {:.6}", self.acceptance_rate());
        for (r, n) in &self.reasons {
            let _ = writeln!(out, "reason.{r} = {n}");
        }
        for (name, stats) in [("arrival_v1", &self.arrival_v1), ("arrival_v2", &self.arrival_v2)] {
            match stats {
                Some(s) => {
                    let _ = writeln!(out, "{name}.count = {}", s.count);
                    let _ = writeln!(out, "{name}.mean = {:.9}", s.mean);
                    let _ = writeln!(out, "{name}.max = {:.9}", s.max);
                }
                None => {
                    let _ = writeln!(out, "{name}.count = 0");
                }
            }
        }
        let _ = writeln!(out, "deadline = {:.9}", self.scenario.geometry.deadline());
        let _ = writeln!(out, "decided_at.max_t = {:.9}", self.latest_decision);
        for (p, n) in &self.patterns {
            let _ = writeln!(out, "pattern.{p} = {n}");
        }
        let _ = writeln!(out, "epr_pairs.max = {}", self.max_epr_pairs);
        let _ = write!(out, "{}", self.theorems);
        if let Some(c) = self.security_claim {
            let _ = writeln!(out, "security_claim = {c}");
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_layout_per_scheme() {
        let s = Scenario::honest(Geometry::default(), Scheme::TypeI);
        let t = theorem_report(&s);
        assert!(t.theorem1_insecure && t.theorem2 && !t.theorem3 && !t.theorem4);
        let s = Scenario::honest(Geometry::default(), Scheme::TeleportSwap);
        let t = theorem_report(&s);
        assert!(!t.theorem1_insecure && t.theorem2 && t.theorem3 && t.theorem4);
    }

    #[test]
    fn empty_aggregate_is_an_error() {
        assert_eq!(aggregate(&Scenario::default(), false, &[]), Err(HarnessError::Empty));
    }
}
