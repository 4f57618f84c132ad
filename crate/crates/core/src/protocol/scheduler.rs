use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::quantum::{bell_pair, Basis, Bb84State, BellOutcome, OutcomeSource, PauliIndex};
use crate::spacetime::{grid_index, Event, Geometry};

use super::{
    ActorId, Detail, Message, Party, Payload, ProtocolError, QubitId, QubitStore, RecordKind, Reply, RoundInputs,
    Scheme, TraceRecord,
};

const EVENT_LIMIT: usize = 10_000;

/// A round-local policy. Callbacks run at the actor's current event and
/// consume no simulated time.
pub trait Agent {
    fn on_start(&mut self, _ctx: &mut RoundCtx<'_>) -> Result<(), ProtocolError> {
        Ok(())
    }

    fn on_message(&mut self, ctx: &mut RoundCtx<'_>, msg: &Message) -> Result<(), ProtocolError>;

    fn on_timer(&mut self, _ctx: &mut RoundCtx<'_>, _tag: u32) -> Result<(), ProtocolError> {
        Ok(())
    }
}

pub(crate) struct Env {
    pub geometry: Geometry,
    pub scheme: Scheme,
    pub inputs: RoundInputs,
    pub teleport_time_offset: f64,
    pub epr_budget: u32,
}

enum Stimulus {
    Start,
    Deliver(Message),
    Timer(u32),
}

struct Pending {
    t: f64,
    x: f64,
    actor: ActorId,
    seq: u64,
    stimulus: Stimulus,
}

impl Pending {
    fn key(&self, other: &Self) -> Ordering {
        grid_index(self.t)
            .cmp(&grid_index(other.t))
            .then(grid_index(self.x).cmp(&grid_index(other.x)))
            .then(self.actor.cmp(&other.actor))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.key(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key(other)
    }
}

struct World {
    env: Env,
    present: Vec<ActorId>,
    store: QubitStore,
    queue: BinaryHeap<Reverse<Pending>>,
    seq: u64,
    next_id: u32,
    epr_used: u32,
    records: Vec<TraceRecord>,
}

impl World {
    fn schedule(&mut self, t: f64, actor: ActorId, stimulus: Stimulus) {
        let x = actor.position(&self.env.geometry);
        self.seq += 1;
        self.queue.push(Reverse(Pending { t, x, actor, seq: self.seq, stimulus }));
    }

    /// Actual recipient of a message addressed to `addressed`: the addressee
    /// if present, otherwise the first adversary met on the way.
    fn route(&self, from: ActorId, addressed: ActorId) -> Option<ActorId> {
        if self.present.contains(&addressed) {
            return Some(addressed);
        }
        let g = &self.env.geometry;
        let (xf, xa) = (from.position(g), addressed.position(g));
        let (lo, hi) = (xf.min(xa), xf.max(xa));
        self.present
            .iter()
            .copied()
            .filter(|a| !a.is_verifier() && *a != from)
            .filter(|a| (lo..=hi).contains(&a.position(g)))
            .min_by(|a, b| (a.position(g) - xf).abs().total_cmp(&(b.position(g) - xf).abs()))
    }
}

/// The view of the world an agent gets during a callback.
pub struct RoundCtx<'a> {
    me: ActorId,
    now: f64,
    world: &'a mut World,
    source: &'a mut dyn OutcomeSource,
}

impl<'a> RoundCtx<'a> {
    pub fn me(&self) -> ActorId {
        self.me
    }

    pub fn now(&self) -> Event {
        Event::new(self.me.position(&self.world.env.geometry), self.now)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.world.env.geometry
    }

    pub fn scheme(&self) -> Scheme {
        self.world.env.scheme
    }

    pub fn inputs(&self) -> &RoundInputs {
        &self.world.env.inputs
    }

    pub fn teleport_time_offset(&self) -> f64 {
        self.world.env.teleport_time_offset
    }

    fn record(&mut self, kind: RecordKind, detail: Detail) {
        let now = self.now();
        self.world.records.push(TraceRecord { t: now.t, x: now.x, party: Party::Actor(self.me), kind, detail });
    }

    fn require_holder(&self, q: QubitId) -> Result<(), ProtocolError> {
        match self.world.store.holder(q)? {
            Some(h) if h == self.me => Ok(()),
            _ => Err(ProtocolError::NotHolder { qubit: q, actor: self.me }),
        }
    }

    /// Emits `payload` toward `to`; it lands exactly `|Δx|` later.
    pub fn send(&mut self, to: ActorId, payload: Payload) -> Result<(), ProtocolError> {
        if let Payload::Qubit(q) = payload {
            self.require_holder(q)?;
        }
        let id = self.world.next_id;
        self.world.next_id += 1;
        let recipient = self.world.route(self.me, to).ok_or(ProtocolError::NoRecipient(id))?;
        let emit = self.now();
        let x_to = recipient.position(&self.world.env.geometry);
        let arrive = Event::new(x_to, emit.t + (x_to - emit.x).abs());
        let msg = Message::new(id, self.me, recipient, to, payload, emit, arrive)?;
        if let Payload::Qubit(q) = payload {
            self.world.store.set_holder(q, None)?;
        }
        let kind = if matches!(payload, Payload::Reply(_)) { RecordKind::Reply } else { RecordKind::Send };
        self.record(kind, Detail::Message(msg));
        self.world.schedule(arrive.t, recipient, Stimulus::Deliver(msg));
        Ok(())
    }

    pub fn reply(&mut self, to: ActorId, reply: Reply) -> Result<(), ProtocolError> {
        self.send(to, Payload::Reply(reply))
    }

    pub fn set_timer(&mut self, at: f64, tag: u32) -> Result<(), ProtocolError> {
        if at < self.now {
            return Err(ProtocolError::TimerInPast { at, now: self.now });
        }
        self.world.schedule(at, self.me, Stimulus::Timer(tag));
        Ok(())
    }

    pub fn prepare(&mut self, qubit: QubitId, state: Bb84State) -> Result<(), ProtocolError> {
        self.world.store.prepare(&[qubit], state.to_state(), self.me)?;
        self.record(RecordKind::Prepare, Detail::PrepareState { qubit, state });
        Ok(())
    }

    /// A local `Φ+` pair on `(a, b)`.
    pub fn prepare_pair(&mut self, a: QubitId, b: QubitId) -> Result<(), ProtocolError> {
        self.world.store.prepare(&[a, b], bell_pair(), self.me)?;
        self.record(RecordKind::Prepare, Detail::PreparePair { a, b, shared_with: None });
        Ok(())
    }

    /// A pre-shared `Φ+` pair: `mine` stays here, `theirs` is already with
    /// `partner`. Counts against the round's entanglement budget.
    pub fn prepare_shared_pair(&mut self, mine: QubitId, theirs: QubitId, partner: ActorId) -> Result<(), ProtocolError> {
        if self.world.epr_used >= self.world.env.epr_budget {
            return Err(ProtocolError::EprBudgetExceeded(self.world.env.epr_budget));
        }
        self.world.epr_used += 1;
        self.world.store.prepare(&[mine, theirs], bell_pair(), self.me)?;
        self.world.store.set_holder(theirs, Some(partner))?;
        self.record(RecordKind::Prepare, Detail::PreparePair { a: mine, b: theirs, shared_with: Some(partner) });
        Ok(())
    }

    pub fn apply_pauli(&mut self, qubit: QubitId, pauli: PauliIndex) -> Result<(), ProtocolError> {
        self.require_holder(qubit)?;
        self.world.store.apply_pauli(qubit, pauli)?;
        self.record(RecordKind::Apply, Detail::Apply { qubit, pauli });
        Ok(())
    }

    pub fn bsm(&mut self, a: QubitId, b: QubitId) -> Result<BellOutcome, ProtocolError> {
        self.require_holder(a)?;
        self.require_holder(b)?;
        let outcome = self.world.store.bsm(a, b, &mut *self.source)?;
        self.record(RecordKind::Bsm, Detail::Bsm { a, b, outcome });
        Ok(outcome)
    }

    pub fn measure(&mut self, qubit: QubitId, basis: Basis) -> Result<bool, ProtocolError> {
        self.require_holder(qubit)?;
        let outcome = self.world.store.measure(qubit, basis, &mut *self.source)?;
        self.record(RecordKind::Measure, Detail::Measure { qubit, basis, outcome });
        Ok(outcome)
    }
}

/// Runs all agents to quiescence and returns the unsorted records.
pub(crate) fn execute(
    env: Env,
    agents: Vec<(ActorId, Box<dyn Agent>)>,
    source: &mut dyn OutcomeSource,
) -> Result<Vec<TraceRecord>, ProtocolError> {
    let mut world = World {
        env,
        present: agents.iter().map(|(id, _)| *id).collect(),
        store: QubitStore::new(),
        queue: BinaryHeap::new(),
        seq: 0,
        next_id: 0,
        epr_used: 0,
        records: Vec::new(),
    };
    let mut agents: BTreeMap<ActorId, Box<dyn Agent>> = agents.into_iter().collect();
    for id in agents.keys() {
        world.schedule(0.0, *id, Stimulus::Start);
    }
    let mut steps = 0;
    while let Some(Reverse(next)) = world.queue.pop() {
        steps += 1;
        if steps > EVENT_LIMIT {
            return Err(ProtocolError::EventLimit(EVENT_LIMIT));
        }
        let agent = agents.get_mut(&next.actor).expect("scheduled actors are present");
        step(&mut world, source, agent.as_mut(), next)?;
    }
    Ok(world.records)
}

fn step(
    world: &mut World,
    source: &mut dyn OutcomeSource,
    agent: &mut dyn Agent,
    next: Pending,
) -> Result<(), ProtocolError> {
    let mut ctx = RoundCtx { me: next.actor, now: next.t, world, source };
    match next.stimulus {
        Stimulus::Start => agent.on_start(&mut ctx),
        Stimulus::Timer(tag) => agent.on_timer(&mut ctx, tag),
        Stimulus::Deliver(msg) => {
            if let Payload::Qubit(q) = msg.payload {
                ctx.world.store.set_holder(q, Some(msg.to))?;
            }
            ctx.record(RecordKind::Receive, Detail::Message(msg));
            agent.on_message(&mut ctx, &msg)
        }
    }
}
