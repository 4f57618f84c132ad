//! Colluding provers P1 at `x_p - delta` and P2 at `x_p + delta`.
//!
//! Every strategy is a pair of round-local agents. Flying systems addressed
//! to the absent prover P are captured by whichever adversary sits first on
//! their path.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::protocol::schemes::Inbox;
use crate::protocol::{
    ActorId, Agent, Detail, Message, Payload, ProtocolError, QubitId, Reply, RoundCtx, RoundTrace, Scheme,
};
use crate::quantum::{correction_bit, relabel_bsm, Basis, BellOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Measure in a guessed basis, no entanglement.
    S0InterceptForward,
    /// Teleport the intercepted qubit over a shared pair and fix the outcome classically.
    S1RelabelTypeI,
    /// Teleport `H_1` onto P2's side, swap there, combine the two labels.
    S1RelabelTypeII,
    /// The relabeling attacks run against the teleport schemes.
    S2RelabelTeleport,
    /// Local operations plus one classical exchange, no entanglement.
    S3ClassicalExchangeTeleport,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::S0InterceptForward,
        Strategy::S1RelabelTypeI,
        Strategy::S1RelabelTypeII,
        Strategy::S2RelabelTeleport,
        Strategy::S3ClassicalExchangeTeleport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::S0InterceptForward => "s0_intercept_forward",
            Strategy::S1RelabelTypeI => "s1_relabel_type_i",
            Strategy::S1RelabelTypeII => "s1_relabel_type_ii",
            Strategy::S2RelabelTeleport => "s2_relabel_teleport",
            Strategy::S3ClassicalExchangeTeleport => "s3_classical_exchange_teleport",
        }
    }

    pub fn uses_entanglement(self) -> bool {
        matches!(self, Strategy::S1RelabelTypeI | Strategy::S1RelabelTypeII | Strategy::S2RelabelTeleport)
    }

    /// Budget used when the scenario does not set one.
    pub fn default_budget(self) -> u32 {
        u32::from(self.uses_entanglement())
    }

    pub fn supports(self, scheme: Scheme) -> bool {
        match self {
            Strategy::S0InterceptForward | Strategy::S1RelabelTypeI => scheme == Scheme::TypeI,
            Strategy::S1RelabelTypeII => scheme == Scheme::TypeII,
            Strategy::S2RelabelTeleport | Strategy::S3ClassicalExchangeTeleport => scheme.is_teleport(),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    /// Accepts full names case-insensitively, or the short forms `S0`..`S3`
    /// where unambiguous.
    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        let by_alias = match lower.as_str() {
            "s0" => Some(Strategy::S0InterceptForward),
            "s2" => Some(Strategy::S2RelabelTeleport),
            "s3" => Some(Strategy::S3ClassicalExchangeTeleport),
            _ => None,
        };
        by_alias
            .or_else(|| Strategy::ALL.into_iter().find(|x| x.name() == lower))
            .ok_or_else(|| {
                let names: Vec<_> = Strategy::ALL.iter().map(|x| x.name()).collect();
                format!("unknown strategy `{s}` (expected honest or one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("strategy {strategy} cannot attack scheme {scheme}")]
    Incompatible { strategy: Strategy, scheme: Scheme },
    #[error("strategy {strategy} requires epr_budget {requirement} (got {got})")]
    Budget { strategy: Strategy, requirement: &'static str, got: u32 },
}

/// Configuration-time precondition of every strategy.
pub fn validate(strategy: Strategy, scheme: Scheme, epr_budget: u32) -> Result<(), AdversaryError> {
    if !strategy.supports(scheme) {
        return Err(AdversaryError::Incompatible { strategy, scheme });
    }
    match (strategy.uses_entanglement(), epr_budget) {
        (true, 0) => Err(AdversaryError::Budget { strategy, requirement: ">= 1", got: 0 }),
        (false, n) if n > 0 => Err(AdversaryError::Budget { strategy, requirement: "= 0", got: n }),
        _ => Ok(()),
    }
}

/// `(P1, P2)` agents for a validated strategy/scheme pair.
pub(crate) fn agents(strategy: Strategy, scheme: Scheme) -> (Box<dyn Agent>, Box<dyn Agent>) {
    match (strategy, scheme) {
        (Strategy::S0InterceptForward, _) => (Box::new(GuessMeasure { done: false }), Box::new(Forwarder)),
        (Strategy::S1RelabelTypeI, _) | (Strategy::S2RelabelTeleport, Scheme::TeleportMeasure) => {
            (Box::new(TeleportNear::default()), Box::new(MeasureFar::default()))
        }
        (Strategy::S1RelabelTypeII, _) => {
            (Box::new(SwapSide::new(ActorId::P1, true)), Box::new(SwapSide::new(ActorId::P2, true)))
        }
        (Strategy::S2RelabelTeleport, _) => {
            (Box::new(SwapSide::new(ActorId::P1, false)), Box::new(SwapSide::new(ActorId::P2, false)))
        }
        (Strategy::S3ClassicalExchangeTeleport, Scheme::TeleportSwap) => {
            (Box::new(ParityNear::default()), Box::new(ParityFar { done: false }))
        }
        (Strategy::S3ClassicalExchangeTeleport, _) => (Box::new(DelayedMeasure::default()), Box::new(Forwarder)),
    }
}

fn broadcast(ctx: &mut RoundCtx<'_>, reply: Reply) -> Result<(), ProtocolError> {
    ctx.reply(ActorId::V1, reply)?;
    ctx.reply(ActorId::V2, reply)
}

/// P1 under S0: measures the captured qubit in its guessed basis at once.
struct GuessMeasure {
    done: bool,
}

impl Agent for GuessMeasure {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        if msg.payload == Payload::Qubit(QubitId::H1) && !self.done {
            self.done = true;
            let guess = ctx.inputs().guess;
            let r = ctx.measure(QubitId::H1, guess)?;
            broadcast(ctx, Reply::Bit(r))?;
        }
        Ok(())
    }
}

/// P2 under S0 and S3: passes the verifier's basis on to P1.
struct Forwarder;

impl Agent for Forwarder {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        if let (ActorId::V2, Payload::Basis(b)) = (msg.from, msg.payload) {
            ctx.send(ActorId::P1, Payload::Basis(b))?;
        }
        Ok(())
    }
}

/// P1 of the measurement-type relabeling attack.
#[derive(Default)]
struct TeleportNear {
    k_a: Option<BellOutcome>,
    far: Option<(bool, Basis)>,
    done: bool,
}

impl Agent for TeleportNear {
    fn on_start(&mut self, ctx: &mut RoundCtx<'_>) -> Result<(), ProtocolError> {
        ctx.prepare_shared_pair(QubitId::Hp1, QubitId::Hp2, ActorId::P2)
    }

    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        match msg.payload {
            Payload::Qubit(QubitId::H1) => {
                let k_a = ctx.bsm(QubitId::H1, QubitId::Hp1)?;
                self.k_a = Some(k_a);
                ctx.send(ActorId::P2, Payload::Bell(k_a))?;
            }
            Payload::BitAndBasis(r, b) => self.far = Some((r, b)),
            _ => {}
        }
        if let (Some(k_a), Some((r, b)), false) = (self.k_a, self.far, self.done) {
            self.done = true;
            ctx.reply(ActorId::V1, Reply::Bit(r ^ correction_bit(k_a, b)))?;
        }
        Ok(())
    }
}

/// P2 of the measurement-type relabeling attack.
#[derive(Default)]
struct MeasureFar {
    own: Option<(bool, Basis)>,
    k_a: Option<BellOutcome>,
    done: bool,
}

impl Agent for MeasureFar {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        match (msg.from, msg.payload) {
            (ActorId::V2, Payload::Basis(b)) => {
                let r = ctx.measure(QubitId::Hp2, b)?;
                self.own = Some((r, b));
                ctx.send(ActorId::P1, Payload::BitAndBasis(r, b))?;
            }
            (ActorId::P1, Payload::Bell(k)) => self.k_a = Some(k),
            _ => {}
        }
        if let (Some(k_a), Some((r, b)), false) = (self.k_a, self.own, self.done) {
            self.done = true;
            ctx.reply(ActorId::V2, Reply::Bit(r ^ correction_bit(k_a, b)))?;
        }
        Ok(())
    }
}

/// Either side of the swap-type relabeling attack. P1 teleports its
/// verifier's half onto the shared pair; P2 swaps it with its own.
struct SwapSide {
    me: ActorId,
    with_instructions: bool,
    inbox: Inbox,
    own: Option<BellOutcome>,
    done: bool,
}

impl SwapSide {
    fn new(me: ActorId, with_instructions: bool) -> Self {
        SwapSide { me, with_instructions, inbox: Inbox::default(), own: None, done: false }
    }

    fn partner(&self) -> ActorId {
        if self.me == ActorId::P1 { ActorId::P2 } else { ActorId::P1 }
    }

    fn near_verifier(&self) -> ActorId {
        if self.me == ActorId::P1 { ActorId::V1 } else { ActorId::V2 }
    }
}

impl Agent for SwapSide {
    fn on_start(&mut self, ctx: &mut RoundCtx<'_>) -> Result<(), ProtocolError> {
        if self.me == ActorId::P1 {
            ctx.prepare_shared_pair(QubitId::Hp1, QubitId::Hp2, ActorId::P2)?;
        }
        Ok(())
    }

    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        if msg.from == self.partner() {
            if let Payload::Bell(k) = msg.payload {
                self.inbox.bell = Some(k);
            }
        } else {
            self.inbox.absorb(msg);
        }
        let (held, instruction, (a, b)) = if self.me == ActorId::P1 {
            (QubitId::H1, self.inbox.u1, (QubitId::H1, QubitId::Hp1))
        } else {
            (QubitId::H2, self.inbox.u2, (QubitId::Hp2, QubitId::H2))
        };
        let ready = self.inbox.has(held) && (!self.with_instructions || instruction.is_some());
        if self.own.is_none() && ready {
            if let Some(u) = instruction.filter(|_| self.with_instructions) {
                ctx.apply_pauli(held, u)?;
            }
            let k = ctx.bsm(a, b)?;
            self.own = Some(k);
            ctx.send(self.partner(), Payload::Bell(k))?;
        }
        if let (Some(own), Some(theirs), false) = (self.own, self.inbox.bell, self.done) {
            self.done = true;
            let (k_a, k_b) = if self.me == ActorId::P1 { (own, theirs) } else { (theirs, own) };
            ctx.reply(self.near_verifier(), Reply::Bell(relabel_bsm(k_a, k_b)))?;
        }
        Ok(())
    }
}

/// P1 under S3 against `teleport_measure`: keeps `H_1` until the basis
/// arrives from P2, then measures and answers both verifiers.
#[derive(Default)]
struct DelayedMeasure {
    holding: bool,
    basis: Option<Basis>,
    done: bool,
}

impl Agent for DelayedMeasure {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        match (msg.from, msg.payload) {
            (_, Payload::Qubit(QubitId::H1)) => self.holding = true,
            (ActorId::P2, Payload::Basis(b)) => self.basis = Some(b),
            _ => {}
        }
        if let (true, Some(b), false) = (self.holding, self.basis, self.done) {
            self.done = true;
            let r = ctx.measure(QubitId::H1, b)?;
            broadcast(ctx, Reply::Bit(r))?;
        }
        Ok(())
    }
}

/// P1 under S3 against `teleport_swap`: both halves are measured in Z and
/// the parity is announced as the swap outcome.
#[derive(Default)]
struct ParityNear {
    m1: Option<bool>,
    m2: Option<bool>,
    done: bool,
}

impl Agent for ParityNear {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        match (msg.from, msg.payload) {
            (_, Payload::Qubit(QubitId::H1)) => self.m1 = Some(ctx.measure(QubitId::H1, Basis::Z)?),
            (ActorId::P2, Payload::Bit(b)) => self.m2 = Some(b),
            _ => {}
        }
        if let (Some(m1), Some(m2), false) = (self.m1, self.m2, self.done) {
            self.done = true;
            broadcast(ctx, Reply::Bell(BellOutcome::new(false, m1 ^ m2)))?;
        }
        Ok(())
    }
}

struct ParityFar {
    done: bool,
}

impl Agent for ParityFar {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        if msg.payload == Payload::Qubit(QubitId::H2) && !self.done {
            self.done = true;
            let m2 = ctx.measure(QubitId::H2, Basis::Z)?;
            ctx.send(ActorId::P1, Payload::Bit(m2))?;
        }
        Ok(())
    }
}

/// Direction structure of the P1/P2 traffic in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CommPattern {
    Localizable,
    SemiLocalizable,
    TwoWay,
}

impl CommPattern {
    pub const ALL: [CommPattern; 3] = [CommPattern::Localizable, CommPattern::SemiLocalizable, CommPattern::TwoWay];

    pub fn name(self) -> &'static str {
        match self {
            CommPattern::Localizable => "localizable",
            CommPattern::SemiLocalizable => "semi_localizable",
            CommPattern::TwoWay => "two_way",
        }
    }
}

impl fmt::Display for CommPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_pattern(trace: &RoundTrace) -> CommPattern {
    let mut forward = false;
    let mut backward = false;
    for m in trace.messages() {
        match (m.from, m.to) {
            (ActorId::P1, ActorId::P2) => forward = true,
            (ActorId::P2, ActorId::P1) => backward = true,
            _ => {}
        }
    }
    match (forward, backward) {
        (false, false) => CommPattern::Localizable,
        (true, true) => CommPattern::TwoWay,
        _ => CommPattern::SemiLocalizable,
    }
}

/// Pre-shared pairs consumed in a round.
pub fn epr_pairs_used(trace: &RoundTrace) -> u32 {
    let n = trace
        .records()
        .iter()
        .filter(|r| matches!(r.detail, Detail::PreparePair { shared_with: Some(_), .. }))
        .count();
    u32::try_from(n).unwrap_or(u32::MAX)
}
