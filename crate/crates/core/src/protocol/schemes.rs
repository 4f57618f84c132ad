//! Verifier and honest-prover behaviour for each scheme.
//!
//! | scheme             | V1 at t = 0        | V2 at t = 0          | honest P at t_p     |
//! |--------------------|--------------------|----------------------|---------------------|
//! | `type_i`           | `I_p` on `H_1`     | basis `b`            | measure `H_1` in b  |
//! | `type_ii`          | `H_1`, `U_1`       | `H_2`, `U_2`         | `U_1⊗U_2`, BSM      |
//! | `teleport_measure` | `H_1`              | `H_2`, basis `b`     | measure `H_1` in b  |
//! | `teleport_swap`    | `H_1`              | `H_2`                | BSM on `H_1, H_2`   |
//!
//! In the teleport schemes V1 teleports `I_p` into `H_v1` at `t_p + offset`
//! and sends `k1` with the description of `I_p` to V2.

use crate::quantum::{Basis, BellOutcome, PauliIndex};

use super::{ActorId, Agent, Message, Payload, ProtocolError, QubitId, Reply, RoundCtx, Scheme};

pub(crate) const TELEPORT_TIMER: u32 = 1;

/// What a prover has collected so far.
#[derive(Debug, Default, Clone)]
pub(crate) struct Inbox {
    pub qubits: Vec<QubitId>,
    pub basis: Option<Basis>,
    pub u1: Option<PauliIndex>,
    pub u2: Option<PauliIndex>,
    pub bit: Option<bool>,
    pub bell: Option<BellOutcome>,
    pub bit_basis: Option<(bool, Basis)>,
}

impl Inbox {
    pub fn absorb(&mut self, m: &Message) {
        match m.payload {
            Payload::Qubit(q) => self.qubits.push(q),
            Payload::Basis(b) => self.basis = Some(b),
            Payload::Instruction(u) if m.from == ActorId::V1 => self.u1 = Some(u),
            Payload::Instruction(u) => self.u2 = Some(u),
            Payload::Bit(b) => self.bit = Some(b),
            Payload::Bell(k) => self.bell = Some(k),
            Payload::BitAndBasis(r, b) => self.bit_basis = Some((r, b)),
            Payload::TeleportRecord { .. } | Payload::Reply(_) => {}
        }
    }

    pub fn has(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }
}

pub fn verifiers(scheme: Scheme) -> (Box<dyn Agent>, Box<dyn Agent>) {
    (Box::new(Verifier1 { scheme }), Box::new(Verifier2 { scheme, partner_half: false, replied: None, done: false }))
}

pub fn honest_prover(scheme: Scheme) -> Box<dyn Agent> {
    Box::new(HonestProver { scheme, inbox: Inbox::default(), done: false })
}

struct Verifier1 {
    scheme: Scheme,
}

impl Agent for Verifier1 {
    fn on_start(&mut self, ctx: &mut RoundCtx<'_>) -> Result<(), ProtocolError> {
        let inputs = *ctx.inputs();
        match self.scheme {
            Scheme::TypeI => {
                ctx.prepare(QubitId::H1, inputs.state)?;
                ctx.send(ActorId::P, Payload::Qubit(QubitId::H1))
            }
            Scheme::TypeII => {
                ctx.prepare_pair(QubitId::Hv1, QubitId::H1)?;
                ctx.send(ActorId::P, Payload::Qubit(QubitId::H1))?;
                ctx.send(ActorId::P, Payload::Instruction(inputs.instructions.0))?;
                // kept half travels to V2 for the joint swap check
                ctx.send(ActorId::V2, Payload::Qubit(QubitId::Hv1))
            }
            Scheme::TeleportMeasure | Scheme::TeleportSwap => {
                ctx.prepare_pair(QubitId::Hv1, QubitId::H1)?;
                ctx.send(ActorId::P, Payload::Qubit(QubitId::H1))?;
                let at = ctx.geometry().t_p() + ctx.teleport_time_offset();
                ctx.set_timer(at, TELEPORT_TIMER)
            }
        }
    }

    fn on_message(&mut self, _ctx: &mut RoundCtx<'_>, _msg: &Message) -> Result<(), ProtocolError> {
        Ok(())
    }

    fn on_timer(&mut self, ctx: &mut RoundCtx<'_>, _tag: u32) -> Result<(), ProtocolError> {
        let state = ctx.inputs().state;
        ctx.prepare(QubitId::Ip, state)?;
        let k1 = ctx.bsm(QubitId::Ip, QubitId::Hv1)?;
        ctx.send(ActorId::V2, Payload::TeleportRecord { k1, state })
    }
}

struct Verifier2 {
    scheme: Scheme,
    partner_half: bool,
    replied: Option<Reply>,
    done: bool,
}

impl Agent for Verifier2 {
    fn on_start(&mut self, ctx: &mut RoundCtx<'_>) -> Result<(), ProtocolError> {
        let inputs = *ctx.inputs();
        match self.scheme {
            Scheme::TypeI => ctx.send(ActorId::P, Payload::Basis(inputs.basis)),
            Scheme::TypeII => {
                ctx.prepare_pair(QubitId::Hv2, QubitId::H2)?;
                ctx.send(ActorId::P, Payload::Qubit(QubitId::H2))?;
                ctx.send(ActorId::P, Payload::Instruction(inputs.instructions.1))
            }
            Scheme::TeleportMeasure => {
                ctx.prepare_pair(QubitId::Hv2, QubitId::H2)?;
                ctx.send(ActorId::P, Payload::Qubit(QubitId::H2))?;
                ctx.send(ActorId::P, Payload::Basis(inputs.basis))
            }
            Scheme::TeleportSwap => {
                ctx.prepare_pair(QubitId::Hv2, QubitId::H2)?;
                ctx.send(ActorId::P, Payload::Qubit(QubitId::H2))
            }
        }
    }

    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        match msg.payload {
            Payload::Qubit(QubitId::Hv1) => self.partner_half = true,
            Payload::Reply(r) if self.replied.is_none() => self.replied = Some(r),
            _ => return Ok(()),
        }
        if self.done {
            return Ok(());
        }
        match (self.scheme, self.replied) {
            (Scheme::TypeII, Some(_)) if self.partner_half => {
                self.done = true;
                ctx.bsm(QubitId::Hv1, QubitId::Hv2)?;
            }
            (Scheme::TeleportSwap, Some(Reply::Bell(k2))) => {
                self.done = true;
                let basis = ctx.inputs().basis;
                ctx.apply_pauli(QubitId::Hv2, k2)?;
                ctx.measure(QubitId::Hv2, basis)?;
            }
            _ => {}
        }
        Ok(())
    }
}

struct HonestProver {
    scheme: Scheme,
    inbox: Inbox,
    done: bool,
}

impl HonestProver {
    fn broadcast(ctx: &mut RoundCtx<'_>, reply: Reply) -> Result<(), ProtocolError> {
        ctx.reply(ActorId::V1, reply)?;
        ctx.reply(ActorId::V2, reply)
    }
}

impl Agent for HonestProver {
    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        self.inbox.absorb(msg);
        if self.done {
            return Ok(());
        }
        let ib = &self.inbox;
        match self.scheme {
            Scheme::TypeI | Scheme::TeleportMeasure => {
                if let (true, Some(b)) = (ib.has(QubitId::H1), ib.basis) {
                    if self.scheme == Scheme::TeleportMeasure && !ib.has(QubitId::H2) {
                        return Ok(());
                    }
                    self.done = true;
                    let r = ctx.measure(QubitId::H1, b)?;
                    Self::broadcast(ctx, Reply::Bit(r))?;
                }
            }
            Scheme::TypeII => {
                if let (true, true, Some(u1), Some(u2)) = (ib.has(QubitId::H1), ib.has(QubitId::H2), ib.u1, ib.u2) {
                    self.done = true;
                    ctx.apply_pauli(QubitId::H1, u1)?;
                    ctx.apply_pauli(QubitId::H2, u2)?;
                    let k = ctx.bsm(QubitId::H1, QubitId::H2)?;
                    Self::broadcast(ctx, Reply::Bell(k))?;
                }
            }
            Scheme::TeleportSwap => {
                if ib.has(QubitId::H1) && ib.has(QubitId::H2) {
                    self.done = true;
                    let k = ctx.bsm(QubitId::H1, QubitId::H2)?;
                    Self::broadcast(ctx, Reply::Bell(k))?;
                }
            }
        }
        Ok(())
    }
}
