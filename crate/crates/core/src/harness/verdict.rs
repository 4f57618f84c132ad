use std::fmt;

use crate::protocol::{
    ActorId, Detail, Party, Payload, QubitId, RecordKind, Reply, RoundTrace, Scheme, TraceRecord,
};
use crate::quantum::{correction_bit, relabel_bsm, Basis, Bb84State, BellOutcome};
use crate::spacetime::{earliest_common_future_of, Event, Geometry};

use super::HarnessError;

/// Why a round was accepted or rejected. A missing reply outranks a late
/// one, which outranks an inconsistent payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reason {
    Ok,
    LateReply,
    InconsistentPayload,
    MissingReply,
}

impl Reason {
    pub const ALL: [Reason; 4] = [Reason::Ok, Reason::LateReply, Reason::InconsistentPayload, Reason::MissingReply];

    pub fn name(self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::LateReply => "late_reply",
            Reason::InconsistentPayload => "inconsistent_payload",
            Reason::MissingReply => "missing_reply",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: Reason,
    pub arrival_v1: Option<f64>,
    pub arrival_v2: Option<f64>,
    /// Earliest event at which both verifiers can know every datum the
    /// decision uses.
    pub decided_at: Event,
}

impl Verdict {
    pub fn record(&self) -> TraceRecord {
        TraceRecord {
            t: self.decided_at.t,
            x: self.decided_at.x,
            party: Party::Verifiers,
            kind: RecordKind::Verdict,
            detail: Detail::Verdict { accepted: self.accepted, reason: self.reason.name() },
        }
    }

    pub fn latest_arrival(&self) -> Option<f64> {
        Some(self.arrival_v1?.max(self.arrival_v2?))
    }
}

/// What the verifiers know at the end of a round, read off the trace.
#[derive(Debug, Default)]
struct Ledger {
    replies: [Option<(Reply, Event)>; 2],
    state: Option<Bb84State>,
    basis: Option<Basis>,
    instructions: [Option<BellOutcome>; 2],
    k1: Option<BellOutcome>,
    swap_check: Option<BellOutcome>,
    measured: Option<(Basis, bool)>,
    origins: Vec<Event>,
}

impl Ledger {
    fn read(trace: &RoundTrace) -> Self {
        let mut l = Ledger::default();
        for r in trace.records() {
            let Party::Actor(who) = r.party else { continue };
            if !who.is_verifier() {
                continue;
            }
            let slot = usize::from(who == ActorId::V2);
            match (&r.detail, r.kind) {
                (Detail::Message(m), RecordKind::Receive) => {
                    if let Payload::Reply(reply) = m.payload {
                        if l.replies[slot].is_none() {
                            l.replies[slot] = Some((reply, r.event()));
                            l.origins.push(r.event());
                        }
                    }
                }
                (Detail::Message(m), RecordKind::Send) => match m.payload {
                    Payload::Basis(b) => l.basis = Some(b),
                    Payload::Instruction(u) => l.instructions[slot] = Some(u),
                    _ => {}
                },
                (Detail::PrepareState { qubit: QubitId::H1 | QubitId::Ip, state }, _) => {
                    l.state = Some(*state);
                    l.origins.push(r.event());
                }
                (Detail::Bsm { a: QubitId::Ip, outcome, .. }, _) => {
                    l.k1 = Some(*outcome);
                    l.origins.push(r.event());
                }
                (Detail::Bsm { a: QubitId::Hv1, outcome, .. }, _) => {
                    l.swap_check = Some(*outcome);
                    l.origins.push(r.event());
                }
                (Detail::Measure { qubit: QubitId::Hv2, basis, outcome }, _) => {
                    l.measured = Some((*basis, *outcome));
                    l.origins.push(r.event());
                }
                _ => {}
            }
        }
        l
    }
}

fn malformed(what: &str) -> HarnessError {
    HarnessError::MalformedTrace(what.to_string())
}

/// The teleport schemes announce the basis only in the measure variant;
/// otherwise it is the basis of the secret itself.
fn effective_basis(l: &Ledger, state: Bb84State) -> Basis {
    l.basis.unwrap_or(state.basis())
}

fn consistent(scheme: Scheme, l: &Ledger, r1: Reply, r2: Reply) -> Result<bool, HarnessError> {
    if r1 != r2 {
        return Ok(false);
    }
    let state = || l.state.ok_or_else(|| malformed("secret state was never prepared"));
    let k1 = || l.k1.ok_or_else(|| malformed("V1 never teleported the secret"));
    Ok(match (scheme, r1) {
        (Scheme::TypeI, Reply::Bit(r)) => {
            let state = state()?;
            let b = l.basis.ok_or_else(|| malformed("V2 never announced a basis"))?;
            b != state.basis() || r == state.bit()
        }
        (Scheme::TypeII, Reply::Bell(k)) => {
            let (Some(u1), Some(u2)) = (l.instructions[0], l.instructions[1]) else {
                return Err(malformed("instructions missing"));
            };
            // kept halves end in the Bell state of the reply shifted by both Paulis
            match l.swap_check {
                Some(label) => label == relabel_bsm(u1 ^ u2, k),
                None => false,
            }
        }
        (Scheme::TeleportMeasure, Reply::Bit(r)) => {
            let state = state()?;
            let b = effective_basis(l, state);
            b != state.basis() || r ^ correction_bit(k1()?, b) == state.bit()
        }
        (Scheme::TeleportSwap, Reply::Bell(_)) => {
            let state = state()?;
            match l.measured {
                Some((b, m)) => b != state.basis() || m ^ correction_bit(k1()?, b) == state.bit(),
                None => false,
            }
        }
        _ => false,
    })
}

/// Judges one round: both replies present, both within `2 t_p + epsilon`,
/// and the reply consistent with the verifiers' secrets.
pub fn judge(trace: &RoundTrace, geometry: &Geometry, epsilon: f64) -> Result<Verdict, HarnessError> {
    let l = Ledger::read(trace);
    let deadline = geometry.deadline();
    let arrival = |i: usize| l.replies[i].map(|(_, e)| e.t);
    let (arrival_v1, arrival_v2) = (arrival(0), arrival(1));

    let mut origins = l.origins.clone();
    for (i, v) in [ActorId::V1, ActorId::V2].into_iter().enumerate() {
        if l.replies[i].is_none() {
            origins.push(Event::new(v.position(geometry), deadline + epsilon));
        }
    }
    let decided_at = earliest_common_future_of(&origins).expect("at least two origins");

    let reason = match (l.replies[0], l.replies[1]) {
        (Some((r1, e1)), Some((r2, e2))) => {
            if e1.t.max(e2.t) > deadline + epsilon {
                Reason::LateReply
            } else if !consistent(trace.scheme, &l, r1, r2)? {
                Reason::InconsistentPayload
            } else {
                Reason::Ok
            }
        }
        _ => Reason::MissingReply,
    };
    Ok(Verdict { accepted: reason == Reason::Ok, reason, arrival_v1, arrival_v2, decided_at })
}
