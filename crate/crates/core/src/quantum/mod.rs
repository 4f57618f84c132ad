//! A small state-vector engine for registers of at most four qubits.
//!
//! Slot 0 is the most significant bit of the amplitude index, so the
//! amplitude of `|q0 q1 ... q(n-1)>` sits at index `q0 q1 ... q(n-1)` read
//! as a binary number.
//!
//! Bell labels double as Pauli indices: the label `(z, x)` names the state
//! `(I ⊗ Z^z X^x)|Φ+>` and the operator `Z^z X^x`. With that convention
//! `Φ+ = (0,0)`, `Ψ+ = (0,1)`, `Φ- = (1,0)` and `Ψ- = (1,1)` (the last up to
//! a global sign).

pub mod density;
pub mod outcome;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::BitXor;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub use density::{reduced_density, trace_distance, DensityMatrix};
pub use outcome::{enumerate_branches, Branch, Forced, OutcomeSource, Scripted, PROB_EPS};

pub const MAX_QUBITS: usize = 4;
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("slot {slot} out of range for a {n}-qubit register")]
    SlotOutOfRange { slot: usize, n: usize },
    #[error("measurement slots must be distinct")]
    DuplicateSlots,
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits(usize),
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("expected a single-qubit state, got {0} qubits")]
    NotSingleQubit(usize),
    #[error("at least one slot must be kept")]
    EmptyKeep,
    #[error("outcome {index} has probability {probability}")]
    ImpossibleOutcome { index: usize, probability: f64 },
    #[error("outcome script exhausted")]
    ScriptExhausted,
    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensity(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

/// Bell-measurement result, equivalently the Pauli `Z^z X^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BellOutcome {
    pub z: bool,
    pub x: bool,
}

pub type PauliIndex = BellOutcome;

impl BellOutcome {
    pub const PHI_PLUS: BellOutcome = BellOutcome { z: false, x: false };
    pub const PSI_PLUS: BellOutcome = BellOutcome { z: false, x: true };
    pub const PHI_MINUS: BellOutcome = BellOutcome { z: true, x: false };
    pub const PSI_MINUS: BellOutcome = BellOutcome { z: true, x: true };
    pub const ALL: [BellOutcome; 4] =
        [Self::PHI_PLUS, Self::PSI_PLUS, Self::PHI_MINUS, Self::PSI_MINUS];

    pub const fn new(z: bool, x: bool) -> Self {
        BellOutcome { z, x }
    }

    /// `2z + x`.
    pub fn index(self) -> usize {
        (usize::from(self.z) << 1) | usize::from(self.x)
    }

    pub fn from_index(i: usize) -> Self {
        BellOutcome { z: i & 2 != 0, x: i & 1 != 0 }
    }

    pub fn name(self) -> &'static str {
        match (self.z, self.x) {
            (false, false) => "Φ+",
            (false, true) => "Ψ+",
            (true, false) => "Φ-",
            (true, true) => "Ψ-",
        }
    }
}

impl BitXor for BellOutcome {
    type Output = BellOutcome;
    fn bitxor(self, rhs: Self) -> Self {
        BellOutcome { z: self.z ^ rhs.z, x: self.x ^ rhs.x }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", u8::from(self.z), u8::from(self.x))
    }
}

/// The four conjugate-coding states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bb84State {
    Zero,
    One,
    Plus,
    Minus,
}

impl Bb84State {
    pub const ALL: [Bb84State; 4] = [Bb84State::Zero, Bb84State::One, Bb84State::Plus, Bb84State::Minus];

    pub fn new(basis: Basis, bit: bool) -> Self {
        match (basis, bit) {
            (Basis::Z, false) => Bb84State::Zero,
            (Basis::Z, true) => Bb84State::One,
            (Basis::X, false) => Bb84State::Plus,
            (Basis::X, true) => Bb84State::Minus,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Bb84State::Zero | Bb84State::One => Basis::Z,
            Bb84State::Plus | Bb84State::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Bb84State::One | Bb84State::Minus)
    }

    pub fn to_state(self) -> StateVector {
        let (a, b) = basis_ket(self.basis(), self.bit());
        StateVector { amps: vec![a, b] }
    }
}

impl fmt::Display for Bb84State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bb84State::Zero => "|0>",
            Bb84State::One => "|1>",
            Bb84State::Plus => "|+>",
            Bb84State::Minus => "|->",
        })
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigenvector of `basis` with eigenvalue `(-1)^bit`.
fn basis_ket(basis: Basis, bit: bool) -> (Complex64, Complex64) {
    match (basis, bit) {
        (Basis::Z, false) => (c(1.0), c(0.0)),
        (Basis::Z, true) => (c(0.0), c(1.0)),
        (Basis::X, false) => (c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)),
        (Basis::X, true) => (c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)),
    }
}

/// `<a b | B_k>` for the Bell state labelled `k`.
fn bell_coefficient(k: BellOutcome, a: usize, b: usize) -> f64 {
    let x = usize::from(k.x);
    if b != a ^ x {
        return 0.0;
    }
    let sign = if k.z && (a ^ x) == 1 { -1.0 } else { 1.0 };
    sign * FRAC_1_SQRT_2
}

/// Normalized amplitudes over `n <= 4` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(QuantumError::BadLength(len));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(n));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(StateVector { amps })
    }

    /// `|index>` over `n` qubits.
    pub fn basis_state(n: usize, index: usize) -> Result<Self, QuantumError> {
        if n > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(n));
        }
        let mut amps = vec![c(0.0); 1 << n];
        *amps.get_mut(index).ok_or(QuantumError::SlotOutOfRange { slot: index, n })? = c(1.0);
        Ok(StateVector { amps })
    }

    /// `alpha|0> + beta|1>`, normalized.
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self, QuantumError> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(StateVector { amps: vec![alpha / norm, beta / norm] })
    }

    /// A Haar-random single-qubit state.
    pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let cos_theta = 1.0 - 2.0 * rng.random::<f64>();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        let half = cos_theta.clamp(-1.0, 1.0).acos() / 2.0;
        StateVector {
            amps: vec![c(half.cos()), Complex64::from_polar(half.sin(), phi)],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `self ⊗ other`: `other`'s qubits follow `self`'s.
    pub fn tensor(&self, other: &StateVector) -> Result<Self, QuantumError> {
        let n = self.num_qubits() + other.num_qubits();
        if n > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(n));
        }
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(StateVector { amps })
    }

    /// `|<self|other>|^2`, blind to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn check_slot(&self, slot: usize) -> Result<usize, QuantumError> {
        let n = self.num_qubits();
        if slot >= n {
            return Err(QuantumError::SlotOutOfRange { slot, n });
        }
        Ok(n - 1 - slot)
    }

    /// Applies a 2x2 matrix `[[m00, m01], [m10, m11]]` to one slot.
    pub fn apply_single(&self, slot: usize, m: [[Complex64; 2]; 2]) -> Result<Self, QuantumError> {
        let pos = self.check_slot(slot)?;
        let mask = 1usize << pos;
        let mut amps = self.amps.clone();
        for i in (0..amps.len()).filter(|i| i & mask == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | mask]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(StateVector { amps })
    }

    /// Splits the amplitude index into the value of the listed bit positions
    /// and the index over the remaining qubits.
    fn split_index(index: usize, n: usize, positions: &[usize]) -> (Vec<usize>, usize) {
        let bits = positions.iter().map(|p| (index >> p) & 1).collect();
        let mut rest = 0;
        for pos in (0..n).rev().filter(|p| !positions.contains(p)) {
            rest = (rest << 1) | ((index >> pos) & 1);
        }
        (bits, rest)
    }

    /// Unnormalized remainders after projecting `slot` onto each eigenvector
    /// of `basis`, with their probabilities.
    fn measurement_branches(&self, slot: usize, basis: Basis) -> Result<[(f64, Vec<Complex64>); 2], QuantumError> {
        let pos = self.check_slot(slot)?;
        let n = self.num_qubits();
        let half = self.amps.len() / 2;
        let mut branches = [vec![c(0.0); half], vec![c(0.0); half]];
        for (i, amp) in self.amps.iter().enumerate() {
            let (bits, rest) = Self::split_index(i, n, &[pos]);
            for (outcome, branch) in branches.iter_mut().enumerate() {
                let (k0, k1) = basis_ket(basis, outcome == 1);
                let coeff = if bits[0] == 0 { k0 } else { k1 };
                branch[rest] += coeff.conj() * amp;
            }
        }
        let [b0, b1] = branches;
        let p0 = b0.iter().map(|a| a.norm_sqr()).sum();
        let p1 = b1.iter().map(|a| a.norm_sqr()).sum();
        Ok([(p0, b0), (p1, b1)])
    }

    fn rebuild_with(slot: usize, n: usize, ket: (Complex64, Complex64), rest: &[Complex64]) -> Vec<Complex64> {
        let pos = n - 1 - slot;
        (0..1usize << n)
            .map(|i| {
                let (bits, r) = Self::split_index(i, n, &[pos]);
                let k = if bits[0] == 0 { ket.0 } else { ket.1 };
                k * rest[r]
            })
            .collect()
    }
}

fn normalize(mut amps: Vec<Complex64>, p: f64) -> Vec<Complex64> {
    let s = p.sqrt();
    amps.iter_mut().for_each(|a| *a /= s);
    amps
}

/// `(|00> + |11>)/√2`.
pub fn bell_pair() -> StateVector {
    StateVector {
        amps: vec![c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)],
    }
}

/// The Bell state with label `k`.
pub fn bell_state(k: BellOutcome) -> StateVector {
    let amps = (0..4).map(|i| c(bell_coefficient(k, i >> 1, i & 1))).collect();
    StateVector { amps }
}

/// Born probabilities of the four Bell outcomes on `slots`, with the
/// unnormalized remainder for each.
fn bell_branches(state: &StateVector, slots: (usize, usize)) -> Result<Vec<(f64, Vec<Complex64>)>, QuantumError> {
    if slots.0 == slots.1 {
        return Err(QuantumError::DuplicateSlots);
    }
    let pa = state.check_slot(slots.0)?;
    let pb = state.check_slot(slots.1)?;
    let n = state.num_qubits();
    let rest_len = state.amps.len() / 4;
    let mut out = Vec::with_capacity(4);
    for k in BellOutcome::ALL {
        let mut rest = vec![c(0.0); rest_len];
        for (i, amp) in state.amps.iter().enumerate() {
            let (bits, r) = StateVector::split_index(i, n, &[pa, pb]);
            let coeff = bell_coefficient(k, bits[0], bits[1]);
            if coeff != 0.0 {
                rest[r] += amp * coeff;
            }
        }
        let p = rest.iter().map(|a| a.norm_sqr()).sum();
        out.push((p, rest));
    }
    Ok(out)
}

/// Bell probabilities on `slots`, indexed by [`BellOutcome::index`].
pub fn bell_probabilities(state: &StateVector, slots: (usize, usize)) -> Result<[f64; 4], QuantumError> {
    let b = bell_branches(state, slots)?;
    Ok([b[0].0, b[1].0, b[2].0, b[3].0])
}

/// Bell-state measurement of two slots. The measured pair is removed from
/// the returned register; the other qubits keep their relative order.
pub fn bsm<S: OutcomeSource + ?Sized>(
    state: &StateVector,
    slots: (usize, usize),
    source: &mut S,
) -> Result<(BellOutcome, StateVector), QuantumError> {
    let mut branches = bell_branches(state, slots)?;
    let probs: Vec<f64> = branches.iter().map(|(p, _)| *p).collect();
    let k = source.pick(&probs)?;
    let (p, rest) = branches.swap_remove(k);
    Ok((BellOutcome::from_index(k), StateVector { amps: normalize(rest, p) }))
}

/// Projective single-qubit measurement; the collapsed qubit stays in the
/// register.
pub fn measure<S: OutcomeSource + ?Sized>(
    state: &StateVector,
    slot: usize,
    basis: Basis,
    source: &mut S,
) -> Result<(bool, StateVector), QuantumError> {
    let (bit, rest) = measure_discard(state, slot, basis, source)?;
    let n = state.num_qubits();
    let amps = StateVector::rebuild_with(slot, n, basis_ket(basis, bit), rest.amplitudes());
    Ok((bit, StateVector { amps }))
}

/// Like [`measure`], but the measured qubit is removed from the register.
pub fn measure_discard<S: OutcomeSource + ?Sized>(
    state: &StateVector,
    slot: usize,
    basis: Basis,
    source: &mut S,
) -> Result<(bool, StateVector), QuantumError> {
    let [(p0, b0), (p1, b1)] = state.measurement_branches(slot, basis)?;
    let outcome = source.pick(&[p0, p1])?;
    let (p, rest) = if outcome == 0 { (p0, b0) } else { (p1, b1) };
    Ok((outcome == 1, StateVector { amps: normalize(rest, p) }))
}

/// Outcome probabilities `[p(0), p(1)]` of measuring `slot` in `basis`.
pub fn measurement_probabilities(state: &StateVector, slot: usize, basis: Basis) -> Result<[f64; 2], QuantumError> {
    let [(p0, _), (p1, _)] = state.measurement_branches(slot, basis)?;
    Ok([p0, p1])
}

/// Applies `Z^z X^x` to `slot`.
pub fn apply_pauli(state: &StateVector, slot: usize, k: PauliIndex) -> Result<StateVector, QuantumError> {
    let zero = c(0.0);
    let one = c(1.0);
    let mut out = state.clone();
    if k.x {
        out = out.apply_single(slot, [[zero, one], [one, zero]])?;
    }
    if k.z {
        out = out.apply_single(slot, [[one, zero], [zero, -one]])?;
    }
    if !k.x && !k.z {
        state.check_slot(slot)?;
    }
    Ok(out)
}

/// Teleports a single-qubit state through a fresh Bell pair.
///
/// Returns the Bell outcome and the receiver's qubit *before* correction,
/// which equals `Z^z X^x |psi>` up to global phase; applying the same Pauli
/// again restores `psi`.
pub fn teleport<S: OutcomeSource + ?Sized>(
    psi: &StateVector,
    source: &mut S,
) -> Result<(BellOutcome, StateVector), QuantumError> {
    if psi.num_qubits() != 1 {
        return Err(QuantumError::NotSingleQubit(psi.num_qubits()));
    }
    let joint = psi.tensor(&bell_pair())?;
    bsm(&joint, (0, 1), source)
}

/// Label of a Bell pair after `Z^z X^x` acts on one of its qubits.
pub fn relabel_bsm(prior: BellOutcome, observed: BellOutcome) -> BellOutcome {
    prior ^ observed
}

/// Outcome flip that `Z^z X^x` induces on a measurement in `basis`.
pub fn correction_bit(k: PauliIndex, basis: Basis) -> bool {
    match basis {
        Basis::Z => k.x,
        Basis::X => k.z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(2024)
    }

    #[test]
    fn bell_pair_amplitudes() {
        let p = bell_pair();
        let a = p.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < EPS && (a[3].re - FRAC_1_SQRT_2).abs() < EPS);
        assert_eq!((a[1], a[2]), (c(0.0), c(0.0)));
        assert!((p.norm_sqr() - 1.0).abs() < EPS);
        assert_eq!(bell_state(BellOutcome::PHI_PLUS), p);
    }

    #[test]
    fn bell_labels_match_named_states() {
        let s = FRAC_1_SQRT_2;
        let psi_plus = StateVector::new(vec![c(0.0), c(s), c(s), c(0.0)]).unwrap();
        let phi_minus = StateVector::new(vec![c(s), c(0.0), c(0.0), c(-s)]).unwrap();
        let psi_minus = StateVector::new(vec![c(0.0), c(s), c(-s), c(0.0)]).unwrap();
        assert!((bell_state(BellOutcome::PSI_PLUS).fidelity(&psi_plus) - 1.0).abs() < EPS);
        assert!((bell_state(BellOutcome::PHI_MINUS).fidelity(&phi_minus) - 1.0).abs() < EPS);
        assert!((bell_state(BellOutcome::PSI_MINUS).fidelity(&psi_minus) - 1.0).abs() < EPS);
    }

    #[test]
    fn bsm_on_phi_plus_is_certain() {
        let probs = bell_probabilities(&bell_pair(), (0, 1)).unwrap();
        assert!((probs[0] - 1.0).abs() < EPS);
        let (k, rest) = bsm(&bell_pair(), (0, 1), &mut rng()).unwrap();
        assert_eq!(k, BellOutcome::PHI_PLUS);
        assert_eq!(rest.num_qubits(), 0);
    }

    #[test]
    fn bsm_on_product_zero_zero() {
        let s = StateVector::basis_state(2, 0).unwrap();
        let probs = bell_probabilities(&s, (0, 1)).unwrap();
        assert!((probs[BellOutcome::PHI_PLUS.index()] - 0.5).abs() < EPS);
        assert!((probs[BellOutcome::PHI_MINUS.index()] - 0.5).abs() < EPS);
        assert!(probs[BellOutcome::PSI_PLUS.index()].abs() < EPS);
        assert!(probs[BellOutcome::PSI_MINUS.index()].abs() < EPS);
    }

    #[test]
    fn bsm_rejects_bad_slots() {
        let s = bell_pair();
        assert_eq!(bsm(&s, (0, 0), &mut rng()).unwrap_err(), QuantumError::DuplicateSlots);
        assert!(matches!(bsm(&s, (0, 2), &mut rng()), Err(QuantumError::SlotOutOfRange { .. })));
    }

    #[test]
    fn measure_examples() {
        let zero = Bb84State::Zero.to_state();
        let plus = Bb84State::Plus.to_state();
        assert_eq!(measurement_probabilities(&zero, 0, Basis::Z).unwrap(), [1.0, 0.0]);
        let px = measurement_probabilities(&plus, 0, Basis::X).unwrap();
        assert!((px[0] - 1.0).abs() < EPS);
        let (bit, after) = measure(&zero, 0, Basis::X, &mut Forced::new(vec![1])).unwrap();
        assert!(bit);
        assert!((after.fidelity(&Bb84State::Minus.to_state()) - 1.0).abs() < EPS);
        assert!(matches!(measure(&zero, 1, Basis::Z, &mut rng()), Err(QuantumError::SlotOutOfRange { .. })));
    }

    #[test]
    fn measure_zero_in_x_is_balanced() {
        let zero = Bb84State::Zero.to_state();
        let mut r = rng();
        let trials = 10_000;
        let ones = (0..trials)
            .filter(|_| measure(&zero, 0, Basis::X, &mut r).unwrap().0)
            .count();
        let freq = ones as f64 / trials as f64;
        let sigma = (0.25f64 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn pauli_examples() {
        let zero = Bb84State::Zero.to_state();
        assert_eq!(apply_pauli(&zero, 0, BellOutcome::PHI_PLUS).unwrap(), zero);
        let flipped = apply_pauli(&zero, 0, BellOutcome::PSI_PLUS).unwrap();
        assert!((flipped.fidelity(&Bb84State::One.to_state()) - 1.0).abs() < EPS);
        let plus = Bb84State::Plus.to_state();
        let out = apply_pauli(&plus, 0, BellOutcome::PSI_MINUS).unwrap();
        assert!((out.fidelity(&Bb84State::Minus.to_state()) - 1.0).abs() < EPS);
        assert!(apply_pauli(&zero, 3, BellOutcome::PHI_PLUS).is_err());
    }

    #[test]
    fn teleport_branches_for_zero() {
        let zero = Bb84State::Zero.to_state();
        let (k, rx) = teleport(&zero, &mut Forced::new(vec![BellOutcome::PSI_PLUS.index()])).unwrap();
        assert_eq!(k, BellOutcome::PSI_PLUS);
        assert!((rx.fidelity(&Bb84State::One.to_state()) - 1.0).abs() < EPS);
        assert_eq!(teleport(&bell_pair(), &mut rng()).unwrap_err(), QuantumError::NotSingleQubit(2));
    }

    #[test]
    fn teleport_corrects_haar_states() {
        let mut r = rng();
        for _ in 0..1000 {
            let psi = StateVector::haar_qubit(&mut r);
            let (k, rx) = teleport(&psi, &mut r).unwrap();
            let fixed = apply_pauli(&rx, 0, k).unwrap();
            assert!(fixed.fidelity(&psi) >= 1.0 - EPS);
        }
    }

    #[test]
    fn relabel_is_xor_and_involutive() {
        for p in BellOutcome::ALL {
            for o in BellOutcome::ALL {
                assert_eq!(relabel_bsm(p, relabel_bsm(p, o)), o);
            }
            assert_eq!(relabel_bsm(BellOutcome::PHI_PLUS, p), p);
        }
    }

    #[test]
    fn correction_bit_examples() {
        for b in Basis::ALL {
            assert!(!correction_bit(BellOutcome::PHI_PLUS, b));
        }
        assert!(correction_bit(BellOutcome::PSI_PLUS, Basis::Z));
        assert!(!correction_bit(BellOutcome::PSI_PLUS, Basis::X));
        assert!(correction_bit(BellOutcome::PHI_MINUS, Basis::X));
    }

    #[test]
    fn state_vector_validation() {
        assert_eq!(StateVector::new(vec![c(1.0); 3]).unwrap_err(), QuantumError::BadLength(3));
        assert!(matches!(StateVector::new(vec![c(1.0), c(1.0)]), Err(QuantumError::NotNormalized(_))));
        let four = StateVector::basis_state(4, 0).unwrap();
        assert_eq!(four.tensor(&Bb84State::Zero.to_state()).unwrap_err(), QuantumError::TooManyQubits(5));
    }
}
