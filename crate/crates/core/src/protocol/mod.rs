//! Actors, light-speed messages, round traces and the round driver.
//!
//! A round is a closed discrete-event simulation: every actor reacts to
//! deliveries and timers in simulated-time order, local computation takes
//! zero time, and every message travels at exactly `c = 1`.

mod scheduler;
pub mod schemes;
mod store;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adversary::{self, Strategy};
use crate::quantum::{Basis, Bb84State, BellOutcome, OutcomeSource, PauliIndex, QuantumError};
use crate::spacetime::{causally_precedes, grid_index, Event, Geometry, TAU_GEO};

pub use scheduler::{Agent, RoundCtx};
pub use store::QubitStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActorId {
    V1,
    V2,
    P,
    P1,
    P2,
}

impl ActorId {
    pub const ALL: [ActorId; 5] = [ActorId::V1, ActorId::V2, ActorId::P, ActorId::P1, ActorId::P2];

    pub fn position(self, g: &Geometry) -> f64 {
        match self {
            ActorId::V1 => g.x_v1(),
            ActorId::V2 => g.x_v2(),
            ActorId::P => g.x_p(),
            ActorId::P1 => g.x_p1(),
            ActorId::P2 => g.x_p2(),
        }
    }

    pub fn is_verifier(self) -> bool {
        matches!(self, ActorId::V1 | ActorId::V2)
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActorId::V1 => "V1",
            ActorId::V2 => "V2",
            ActorId::P => "P",
            ActorId::P1 => "P1",
            ActorId::P2 => "P2",
        })
    }
}

/// A participant pinned to its worldline `x = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actor {
    pub id: ActorId,
    pub x: f64,
    pub honest: bool,
}

impl Actor {
    pub fn new(id: ActorId, g: &Geometry) -> Self {
        Actor { id, x: id.position(g), honest: !matches!(id, ActorId::P1 | ActorId::P2) }
    }
}

/// Who a trace record belongs to. Joint verifier decisions are attributed to
/// both verifiers at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Actor(ActorId),
    Verifiers,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Actor(a) => a.fmt(f),
            Party::Verifiers => f.write_str("V1+V2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QubitId {
    /// The single conjugate-coding qubit carrying the secret.
    Ip,
    Hv1,
    H1,
    Hv2,
    H2,
    /// Halves of the adversaries' pre-shared pair.
    Hp1,
    Hp2,
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitId::Ip => "I_p",
            QubitId::Hv1 => "H_v1",
            QubitId::H1 => "H_1",
            QubitId::Hv2 => "H_v2",
            QubitId::H2 => "H_2",
            QubitId::Hp1 => "H_p1",
            QubitId::Hp2 => "H_p2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reply {
    Bit(bool),
    Bell(BellOutcome),
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reply::Bit(b) => write!(f, "bit={}", u8::from(*b)),
            Reply::Bell(k) => write!(f, "bsm={k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    Qubit(QubitId),
    Basis(Basis),
    /// Pauli the prover must apply to the qubit from the same verifier.
    Instruction(PauliIndex),
    Bit(bool),
    Bell(BellOutcome),
    BitAndBasis(bool, Basis),
    /// V1's teleportation outcome and the classical description of `I_p`.
    TeleportRecord { k1: BellOutcome, state: Bb84State },
    Reply(Reply),
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Qubit(q) => write!(f, "qubit={q}"),
            Payload::Basis(b) => write!(f, "basis={b}"),
            Payload::Instruction(u) => write!(f, "U={u}"),
            Payload::Bit(b) => write!(f, "bit={}", u8::from(*b)),
            Payload::Bell(k) => write!(f, "bsm={k}"),
            Payload::BitAndBasis(r, b) => write!(f, "bit={},basis={b}", u8::from(*r)),
            Payload::TeleportRecord { k1, state } => write!(f, "k1={k1},I_p={state}"),
            Payload::Reply(r) => write!(f, "reply:{r}"),
        }
    }
}

/// A light-speed transmission between two worldlines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub id: u32,
    pub from: ActorId,
    /// Actual recipient; differs from `addressed` when the message was intercepted.
    pub to: ActorId,
    pub addressed: ActorId,
    pub payload: Payload,
    pub emit: Event,
    pub arrive: Event,
}

impl Message {
    /// Validates the requested arrival against light-speed propagation.
    pub fn new(
        id: u32,
        from: ActorId,
        to: ActorId,
        addressed: ActorId,
        payload: Payload,
        emit: Event,
        arrive: Event,
    ) -> Result<Self, ProtocolError> {
        let expected = emit.t + (arrive.x - emit.x).abs();
        if arrive.t < expected - TAU_GEO || !causally_precedes(&emit, &arrive) {
            return Err(ProtocolError::Superluminal { from, to, emit, arrive });
        }
        if arrive.t > expected + TAU_GEO {
            return Err(ProtocolError::Subluminal { from, to, emit, arrive });
        }
        Ok(Message { id, from, to, addressed, payload, emit, arrive })
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}->{} {}", self.id, self.from, self.to, self.payload)?;
        if self.addressed != self.to {
            write!(f, " [addressed {}]", self.addressed)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordKind {
    Prepare,
    Send,
    Receive,
    Apply,
    Bsm,
    Measure,
    Reply,
    Verdict,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Prepare => "prepare",
            RecordKind::Send => "send",
            RecordKind::Receive => "receive",
            RecordKind::Apply => "apply",
            RecordKind::Bsm => "bsm",
            RecordKind::Measure => "measure",
            RecordKind::Reply => "reply",
            RecordKind::Verdict => "verdict",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detail {
    PrepareState { qubit: QubitId, state: Bb84State },
    PreparePair { a: QubitId, b: QubitId, shared_with: Option<ActorId> },
    Message(Message),
    Apply { qubit: QubitId, pauli: PauliIndex },
    Bsm { a: QubitId, b: QubitId, outcome: BellOutcome },
    Measure { qubit: QubitId, basis: Basis, outcome: bool },
    Verdict { accepted: bool, reason: &'static str },
}

impl fmt::Display for Detail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detail::PrepareState { qubit, state } => write!(f, "{qubit}={state}"),
            Detail::PreparePair { a, b, shared_with } => {
                write!(f, "{a},{b}=Φ+")?;
                if let Some(p) = shared_with {
                    write!(f, " shared with {p}")?;
                }
                Ok(())
            }
            Detail::Message(m) => m.fmt(f),
            Detail::Apply { qubit, pauli } => write!(f, "U={pauli} on {qubit}"),
            Detail::Bsm { a, b, outcome } => write!(f, "{a},{b} -> {outcome} ({})", outcome.name()),
            Detail::Measure { qubit, basis, outcome } => {
                write!(f, "{qubit} in {basis} -> {}", u8::from(*outcome))
            }
            Detail::Verdict { accepted, reason } => {
                write!(f, "{} {reason}", if *accepted { "accept" } else { "reject" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub x: f64,
    pub party: Party,
    pub kind: RecordKind,
    pub detail: Detail,
}

impl TraceRecord {
    pub fn event(&self) -> Event {
        Event::new(self.x, self.t)
    }

    pub fn message(&self) -> Option<&Message> {
        match &self.detail {
            Detail::Message(m) => Some(m),
            _ => None,
        }
    }

    fn order(&self, other: &Self) -> Ordering {
        grid_index(self.t)
            .cmp(&grid_index(other.t))
            .then(grid_index(self.x).cmp(&grid_index(other.x)))
            .then(self.party.cmp(&other.party))
            .then(self.kind.cmp(&other.kind))
    }
}

/// All records of one round, sorted by `(t, x, party, kind)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub round: u64,
    pub scheme: Scheme,
    records: Vec<TraceRecord>,
}

impl RoundTrace {
    pub fn new(round: u64, scheme: Scheme, mut records: Vec<TraceRecord>) -> Self {
        records.sort_by(TraceRecord::order);
        RoundTrace { round, scheme, records }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Inserts a record at its sorted position, after any equal-keyed ones.
    pub fn push(&mut self, record: TraceRecord) {
        let at = self.records.partition_point(|r| r.order(&record) != Ordering::Greater);
        self.records.insert(at, record);
    }

    /// Every message, taken from its emission record.
    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.records
            .iter()
            .filter(|r| matches!(r.kind, RecordKind::Send | RecordKind::Reply))
            .filter_map(TraceRecord::message)
    }

    /// Messages delivered to `actor`, in arrival order.
    pub fn received_by(&self, actor: ActorId) -> impl Iterator<Item = &Message> {
        self.records
            .iter()
            .filter(move |r| r.kind == RecordKind::Receive && r.party == Party::Actor(actor))
            .filter_map(TraceRecord::message)
    }

    /// Post-hoc check: every delivery has an earlier emission of the same
    /// message, and that emission lies in the delivery's causal past.
    pub fn check_causality(&self) -> Result<(), ProtocolError> {
        let mut sent: BTreeMap<u32, (usize, Message)> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            let Some(m) = r.message() else { continue };
            match r.kind {
                RecordKind::Send | RecordKind::Reply => {
                    sent.insert(m.id, (i, *m));
                }
                RecordKind::Receive => {
                    let (j, s) = sent.get(&m.id).ok_or(ProtocolError::UnmatchedReceive(m.id))?;
                    debug_assert!(*j < i);
                    if !s.arrive.approx_eq(&r.event()) || !causally_precedes(&s.emit, &r.event()) {
                        return Err(ProtocolError::AcausalReceive(m.id));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for RoundTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{}\t{:.9}\t{:.9}\t{}\t{}\t{}", self.round, r.t, r.x, r.party, r.kind, r.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    TypeI,
    TypeII,
    TeleportMeasure,
    TeleportSwap,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::TypeI, Scheme::TypeII, Scheme::TeleportMeasure, Scheme::TeleportSwap];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::TypeI => "type_i",
            Scheme::TypeII => "type_ii",
            Scheme::TeleportMeasure => "teleport_measure",
            Scheme::TeleportSwap => "teleport_swap",
        }
    }

    pub fn is_teleport(self) -> bool {
        matches!(self, Scheme::TeleportMeasure | Scheme::TeleportSwap)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected type_i, type_ii, teleport_measure or teleport_swap)"))
    }
}

/// Every classical random choice of a round, made before any quantum event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundInputs {
    /// The secret `I_p`.
    pub state: Bb84State,
    /// Measurement basis announced by V2; equals `state.basis()` in sampled rounds.
    pub basis: Basis,
    /// `(U_1, U_2)` for type (ii).
    pub instructions: (PauliIndex, PauliIndex),
    /// Basis guessed by an unentangled adversary.
    pub guess: Basis,
}

impl RoundInputs {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let state = Bb84State::ALL[rng.random_range(0..4)];
        let u1 = BellOutcome::from_index(rng.random_range(0..4));
        let u2 = BellOutcome::from_index(rng.random_range(0..4));
        let guess = Basis::ALL[rng.random_range(0..2)];
        RoundInputs { state, basis: state.basis(), instructions: (u1, u2), guess }
    }
}

impl Default for RoundInputs {
    fn default() -> Self {
        RoundInputs {
            state: Bb84State::Zero,
            basis: Basis::Z,
            instructions: (BellOutcome::PHI_PLUS, BellOutcome::PHI_PLUS),
            guess: Basis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provers {
    Honest,
    Dishonest { strategy: Strategy, epr_budget: u32 },
}

/// Everything a round needs besides its index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSetup {
    pub geometry: Geometry,
    pub scheme: Scheme,
    pub provers: Provers,
    /// Shift of V1's teleportation time relative to `t_p`; within `(-delta, 0]`.
    pub teleport_time_offset: f64,
    pub seed: u64,
}

impl RoundSetup {
    pub fn honest(geometry: Geometry, scheme: Scheme, seed: u64) -> Self {
        RoundSetup { geometry, scheme, provers: Provers::Honest, teleport_time_offset: 0.0, seed }
    }

    pub fn attack(geometry: Geometry, scheme: Scheme, strategy: Strategy, epr_budget: u32, seed: u64) -> Self {
        RoundSetup {
            geometry,
            scheme,
            provers: Provers::Dishonest { strategy, epr_budget },
            teleport_time_offset: 0.0,
            seed,
        }
    }

    /// The generator for one round: stream `round` of the seeded ChaCha8.
    pub fn rng(&self, round: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(round);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("causality violation: {from}->{to} emitted at {emit} cannot arrive at {arrive}")]
    Superluminal { from: ActorId, to: ActorId, emit: Event, arrive: Event },
    #[error("{from}->{to} emitted at {emit} must arrive at light speed, not at {arrive}")]
    Subluminal { from: ActorId, to: ActorId, emit: Event, arrive: Event },
    #[error("causality violation: message #{0} received without a matching send")]
    UnmatchedReceive(u32),
    #[error("causality violation: message #{0} received outside the future of its emission")]
    AcausalReceive(u32),
    #[error("nobody on the path picks up message #{0} addressed to an absent actor")]
    NoRecipient(u32),
    #[error("{actor} does not hold qubit {qubit}")]
    NotHolder { qubit: QubitId, actor: ActorId },
    #[error("qubit {0} does not exist")]
    UnknownQubit(QubitId),
    #[error("qubit {0} already exists")]
    QubitExists(QubitId),
    #[error("pre-shared entanglement budget of {0} pair(s) exceeded")]
    EprBudgetExceeded(u32),
    #[error("timer at t = {at} is earlier than now (t = {now})")]
    TimerInPast { at: f64, now: f64 },
    #[error("round did not settle within {0} events")]
    EventLimit(usize),
    #[error(transparent)]
    Adversary(#[from] adversary::AdversaryError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

impl ProtocolError {
    pub fn is_causality_violation(&self) -> bool {
        matches!(
            self,
            ProtocolError::Superluminal { .. }
                | ProtocolError::Subluminal { .. }
                | ProtocolError::UnmatchedReceive(_)
                | ProtocolError::AcausalReceive(_)
        )
    }
}

/// Runs round `round` with inputs and outcomes drawn from its own RNG stream.
pub fn run_round(setup: &RoundSetup, round: u64) -> Result<RoundTrace, ProtocolError> {
    let mut rng = setup.rng(round);
    let inputs = RoundInputs::sample(&mut rng);
    run_round_with(setup, round, &inputs, &mut rng)
}

/// Runs one round with explicit inputs and an explicit outcome source.
pub fn run_round_with(
    setup: &RoundSetup,
    round: u64,
    inputs: &RoundInputs,
    source: &mut dyn OutcomeSource,
) -> Result<RoundTrace, ProtocolError> {
    let (v1, v2) = schemes::verifiers(setup.scheme);
    let mut agents: Vec<(ActorId, Box<dyn Agent>)> = vec![(ActorId::V1, v1), (ActorId::V2, v2)];
    let epr_budget = match setup.provers {
        Provers::Honest => {
            agents.push((ActorId::P, schemes::honest_prover(setup.scheme)));
            0
        }
        Provers::Dishonest { strategy, epr_budget } => {
            adversary::validate(strategy, setup.scheme, epr_budget)?;
            let (p1, p2) = adversary::agents(strategy, setup.scheme);
            agents.push((ActorId::P1, p1));
            agents.push((ActorId::P2, p2));
            epr_budget
        }
    };
    let env = scheduler::Env {
        geometry: setup.geometry,
        scheme: setup.scheme,
        inputs: *inputs,
        teleport_time_offset: setup.teleport_time_offset,
        epr_budget,
    };
    let records = scheduler::execute(env, agents, source)?;
    let trace = RoundTrace::new(round, setup.scheme, records);
    trace.check_causality()?;
    Ok(trace)
}
