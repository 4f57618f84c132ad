//! Density matrices, built on `nalgebra`.
//!
//! The operations here work on whole matrices (Kronecker products, explicit
//! projectors, swap networks) rather than on amplitude indices, so they can
//! serve as an independent check on the state-vector engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{BellOutcome, Basis, QuantumError, StateVector, NORM_TOL, PROB_EPS};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    m: CMatrix,
}

impl DensityMatrix {
    /// `|psi><psi|` for any normalized ket whose length is a power of two.
    pub fn from_ket(ket: &CVector) -> Self {
        let n = ket.len().trailing_zeros() as usize;
        DensityMatrix { n, m: ket * ket.adjoint() }
    }

    pub fn from_state(state: &StateVector) -> Self {
        Self::from_ket(&CVector::from_column_slice(state.amplitudes()))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self, QuantumError> {
        if !m.is_square() || !m.nrows().is_power_of_two() {
            return Err(QuantumError::InvalidDensity("not a square 2^n matrix"));
        }
        let rho = DensityMatrix { n: m.nrows().trailing_zeros() as usize, m };
        rho.validate()?;
        Ok(rho)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        DensityMatrix { n, m: CMatrix::identity(d, d) / c(d as f64) }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()) / c(2.0);
        h.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let diff = (&self.m - self.m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if diff > HERMITIAN_TOL {
            return Err(QuantumError::InvalidDensity("not Hermitian"));
        }
        if (self.trace() - c(1.0)).norm() > NORM_TOL {
            return Err(QuantumError::InvalidDensity("trace differs from 1"));
        }
        if self.eigenvalues().iter().any(|&l| l < -PSD_TOL) {
            return Err(QuantumError::InvalidDensity("negative eigenvalue"));
        }
        Ok(())
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &DensityMatrix) -> Self {
        DensityMatrix { n: self.n + other.n, m: self.m.kronecker(&other.m) }
    }

    /// `U rho U†` where `op` acts on the adjacent qubits starting at `first`.
    pub fn apply(&self, op: &CMatrix, first: usize) -> Self {
        let u = embed(op, first, self.n);
        DensityMatrix { n: self.n, m: &u * &self.m * u.adjoint() }
    }

    /// Exchanges qubits `i` and `i + 1`.
    pub fn swap_adjacent(&self, i: usize) -> Self {
        self.apply(&swap_gate(), i)
    }

    /// Reorders qubits so that `front` come first, in the given order; the
    /// remaining qubits keep their relative order. Returns the new matrix and
    /// the original index of each position.
    pub fn move_to_front(&self, front: &[usize]) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.n).collect();
        let mut rho = self.clone();
        for (target_pos, q) in front.iter().enumerate() {
            let mut pos = order.iter().position(|o| o == q).expect("qubit in range");
            while pos > target_pos {
                rho = rho.swap_adjacent(pos - 1);
                order.swap(pos - 1, pos);
                pos -= 1;
            }
        }
        (rho, order)
    }

    /// Traces out the first `k` qubits.
    fn trace_out_front(&self, k: usize) -> Self {
        let d_rest = 1usize << (self.n - k);
        let mut out = CMatrix::zeros(d_rest, d_rest);
        for a in 0..1usize << k {
            out += self.m.view((a * d_rest, a * d_rest), (d_rest, d_rest));
        }
        DensityMatrix { n: self.n - k, m: out }
    }

    /// Reduced state on `keep` (in ascending qubit order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, QuantumError> {
        if keep.is_empty() {
            return Err(QuantumError::EmptyKeep);
        }
        if let Some(&slot) = keep.iter().find(|&&q| q >= self.n) {
            return Err(QuantumError::SlotOutOfRange { slot, n: self.n });
        }
        let discard: Vec<usize> = (0..self.n).filter(|q| !keep.contains(q)).collect();
        let (moved, _) = self.move_to_front(&discard);
        Ok(moved.trace_out_front(discard.len()))
    }

    /// `Tr(Π rho)` for the projector onto `ket` on `qubits`.
    pub fn probability(&self, ket: &CVector, qubits: &[usize]) -> f64 {
        let (moved, _) = self.move_to_front(qubits);
        let proj = projector(ket, self.n);
        (&proj * &moved.m).trace().re
    }

    /// Projects `qubits` onto `ket` and discards them. Returns the outcome
    /// probability and, when it is non-zero, the normalized state of the
    /// remaining qubits in their original relative order.
    pub fn project(&self, ket: &CVector, qubits: &[usize]) -> (f64, Option<DensityMatrix>) {
        let (moved, _) = self.move_to_front(qubits);
        let proj = projector(ket, self.n);
        let p = (&proj * &moved.m).trace().re;
        if p <= PROB_EPS {
            return (p, None);
        }
        let post = DensityMatrix { n: self.n, m: &proj * &moved.m * &proj / c(p) };
        (p, Some(post.trace_out_front(qubits.len())))
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with_ket(&self, ket: &CVector) -> f64 {
        (ket.adjoint() * &self.m * ket)[(0, 0)].re
    }
}

/// `(I ⊗ ... ⊗ op ⊗ ... ⊗ I)` with `op` starting at qubit `first`.
pub fn embed(op: &CMatrix, first: usize, n: usize) -> CMatrix {
    let k = op.nrows().trailing_zeros() as usize;
    let left = CMatrix::identity(1 << first, 1 << first);
    let right_n = n - first - k;
    let right = CMatrix::identity(1 << right_n, 1 << right_n);
    left.kronecker(op).kronecker(&right)
}

/// `|v><v|` on the leading qubits, identity on the rest.
fn projector(ket: &CVector, n: usize) -> CMatrix {
    let p = ket * ket.adjoint();
    embed(&p, 0, n)
}

pub fn swap_gate() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(1, 2)] = c(1.0);
    m[(2, 1)] = c(1.0);
    m[(3, 3)] = c(1.0);
    m
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// Matrix of `Z^z X^x`.
pub fn pauli_matrix(k: BellOutcome) -> CMatrix {
    let mut m = CMatrix::identity(2, 2);
    if k.x {
        m = pauli_x() * m;
    }
    if k.z {
        m = pauli_z() * m;
    }
    m
}

/// `(I ⊗ Z^z X^x)(|00> + |11>)/√2`, built by matrix-vector product.
pub fn bell_ket(k: BellOutcome) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi_plus = CVector::from_column_slice(&[c(s), c(0.0), c(0.0), c(s)]);
    CMatrix::identity(2, 2).kronecker(&pauli_matrix(k)) * phi_plus
}

/// Eigenvector of `basis` for outcome `bit`.
pub fn basis_ket(basis: Basis, bit: bool) -> CVector {
    let zero = CVector::from_column_slice(&[c(1.0), c(0.0)]);
    let one = CVector::from_column_slice(&[c(0.0), c(1.0)]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (basis, bit) {
        (Basis::Z, false) => zero,
        (Basis::Z, true) => one,
        (Basis::X, false) => (zero + one) * c(s),
        (Basis::X, true) => (zero - one) * c(s),
    }
}

/// Partial trace of a pure register, computed directly from amplitudes.
pub fn reduced_density(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix, QuantumError> {
    let n = state.num_qubits();
    if keep.is_empty() {
        return Err(QuantumError::EmptyKeep);
    }
    if let Some(&slot) = keep.iter().find(|&&q| q >= n) {
        return Err(QuantumError::SlotOutOfRange { slot, n });
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let positions: Vec<usize> = keep.iter().map(|s| n - 1 - s).collect();
    let d = 1usize << keep.len();
    let sub_index = |i: usize| positions.iter().fold(0, |acc, p| (acc << 1) | ((i >> p) & 1));
    let kept_mask: usize = positions.iter().map(|p| 1usize << p).sum();
    let amps = state.amplitudes();
    let mut m = CMatrix::zeros(d, d);
    for (i, ai) in amps.iter().enumerate() {
        for (j, aj) in amps.iter().enumerate() {
            if i & !kept_mask == j & !kept_mask {
                m[(sub_index(i), sub_index(j))] += ai * aj.conj();
            }
        }
    }
    Ok(DensityMatrix { n: keep.len(), m })
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = DensityMatrix { n: a.n, m: &a.m - &b.m };
    0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell_pair, Bb84State};

    #[test]
    fn reduced_bell_half_is_maximally_mixed() {
        let rho = reduced_density(&bell_pair(), &[0]).unwrap();
        assert!(trace_distance(&rho, &DensityMatrix::maximally_mixed(1)) < 1e-12);
        assert_eq!(reduced_density(&bell_pair(), &[]).unwrap_err(), QuantumError::EmptyKeep);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityMatrix::from_state(&Bb84State::Zero.to_state());
        let one = DensityMatrix::from_state(&Bb84State::One.to_state());
        assert!(trace_distance(&zero, &zero).abs() < 1e-12);
        assert!((trace_distance(&zero, &one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kron_route_agrees_with_amplitude_route() {
        let state = Bb84State::Plus
            .to_state()
            .tensor(&bell_pair())
            .unwrap()
            .tensor(&Bb84State::One.to_state())
            .unwrap();
        let rho = DensityMatrix::from_state(&state);
        rho.validate().unwrap();
        for keep in [vec![0], vec![1, 2], vec![0, 3], vec![1, 3], vec![0, 1, 2]] {
            let a = rho.partial_trace(&keep).unwrap();
            let b = reduced_density(&state, &keep).unwrap();
            assert!(trace_distance(&a, &b) < 1e-12, "keep {keep:?}");
            a.validate().unwrap();
        }
    }

    #[test]
    fn projecting_bell_halves() {
        let rho = DensityMatrix::from_state(&bell_pair());
        let (p, rest) = rho.project(&basis_ket(Basis::Z, true), &[1]);
        assert!((p - 0.5).abs() < 1e-12);
        let rest = rest.unwrap();
        assert!((rest.fidelity_with_ket(&basis_ket(Basis::Z, true)) - 1.0).abs() < 1e-12);
        for k in BellOutcome::ALL {
            let expect = if k == BellOutcome::PHI_PLUS { 1.0 } else { 0.0 };
            assert!((rho.probability(&bell_ket(k), &[0, 1]) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let mut m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::from_matrix(m.clone()).is_err());
        m[(1, 1)] = c(0.0);
        assert!(DensityMatrix::from_matrix(m.clone()).is_ok());
        m[(0, 1)] = c(0.3);
        assert!(DensityMatrix::from_matrix(m).is_err());
    }
}
