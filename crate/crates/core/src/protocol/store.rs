use std::collections::BTreeMap;

use crate::quantum::{self, Basis, BellOutcome, OutcomeSource, PauliIndex, StateVector};

use super::{ActorId, ProtocolError, QubitId};

#[derive(Debug, Clone)]
struct Register {
    qubits: Vec<QubitId>,
    state: StateVector,
}

/// Round-local quantum memory: a set of independent registers, merged
/// lazily when an operation spans two of them. Measured qubits leave the
/// store.
#[derive(Debug, Default)]
pub struct QubitStore {
    registers: Vec<Register>,
    holders: BTreeMap<QubitId, Option<ActorId>>,
    widest: usize,
}

impl QubitStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prepare(&mut self, qubits: &[QubitId], state: StateVector, holder: ActorId) -> Result<(), ProtocolError> {
        debug_assert_eq!(qubits.len(), state.num_qubits());
        if let Some(q) = qubits.iter().find(|q| self.holders.contains_key(q)) {
            return Err(ProtocolError::QubitExists(*q));
        }
        for q in qubits {
            self.holders.insert(*q, Some(holder));
        }
        self.widest = self.widest.max(qubits.len());
        self.registers.push(Register { qubits: qubits.to_vec(), state });
        Ok(())
    }

    /// `None` while the qubit is in flight.
    pub fn holder(&self, q: QubitId) -> Result<Option<ActorId>, ProtocolError> {
        self.holders.get(&q).copied().ok_or(ProtocolError::UnknownQubit(q))
    }

    pub fn set_holder(&mut self, q: QubitId, holder: Option<ActorId>) -> Result<(), ProtocolError> {
        let slot = self.holders.get_mut(&q).ok_or(ProtocolError::UnknownQubit(q))?;
        *slot = holder;
        Ok(())
    }

    /// Widest register this store ever held.
    pub fn widest_register(&self) -> usize {
        self.widest
    }

    pub fn live_qubits(&self) -> Vec<QubitId> {
        self.holders.keys().copied().collect()
    }

    /// Current joint state of the register containing `q`, with its labels.
    pub fn register_of(&self, q: QubitId) -> Result<(&[QubitId], &StateVector), ProtocolError> {
        let (r, _) = self.locate(q)?;
        let reg = &self.registers[r];
        Ok((&reg.qubits, &reg.state))
    }

    fn locate(&self, q: QubitId) -> Result<(usize, usize), ProtocolError> {
        self.registers
            .iter()
            .enumerate()
            .find_map(|(r, reg)| reg.qubits.iter().position(|x| *x == q).map(|s| (r, s)))
            .ok_or(ProtocolError::UnknownQubit(q))
    }

    /// Brings `a` and `b` into one register and returns its index.
    fn join(&mut self, a: QubitId, b: QubitId) -> Result<usize, ProtocolError> {
        let (ra, _) = self.locate(a)?;
        let (rb, _) = self.locate(b)?;
        if ra == rb {
            return Ok(ra);
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        let second = self.registers.remove(hi);
        let first = &mut self.registers[lo];
        first.state = first.state.tensor(&second.state)?;
        first.qubits.extend(second.qubits);
        self.widest = self.widest.max(first.qubits.len());
        Ok(lo)
    }

    fn drop_qubits(&mut self, r: usize, gone: &[QubitId], state: StateVector) {
        for q in gone {
            self.holders.remove(q);
        }
        let reg = &mut self.registers[r];
        reg.qubits.retain(|q| !gone.contains(q));
        reg.state = state;
        if reg.qubits.is_empty() {
            self.registers.remove(r);
        }
    }

    pub fn apply_pauli(&mut self, q: QubitId, k: PauliIndex) -> Result<(), ProtocolError> {
        let (r, s) = self.locate(q)?;
        let reg = &mut self.registers[r];
        reg.state = quantum::apply_pauli(&reg.state, s, k)?;
        Ok(())
    }

    pub fn measure<S: OutcomeSource + ?Sized>(
        &mut self,
        q: QubitId,
        basis: Basis,
        source: &mut S,
    ) -> Result<bool, ProtocolError> {
        let (r, s) = self.locate(q)?;
        let (bit, rest) = quantum::measure_discard(&self.registers[r].state, s, basis, source)?;
        self.drop_qubits(r, &[q], rest);
        Ok(bit)
    }

    pub fn bsm<S: OutcomeSource + ?Sized>(
        &mut self,
        a: QubitId,
        b: QubitId,
        source: &mut S,
    ) -> Result<BellOutcome, ProtocolError> {
        let r = self.join(a, b)?;
        let reg = &self.registers[r];
        let sa = reg.qubits.iter().position(|x| *x == a).expect("joined");
        let sb = reg.qubits.iter().position(|x| *x == b).expect("joined");
        let (k, rest) = quantum::bsm(&reg.state, (sa, sb), source)?;
        self.drop_qubits(r, &[a, b], rest);
        Ok(k)
    }
}
