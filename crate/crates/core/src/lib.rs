//! Discrete-event simulation of quantum position verification in 1+1D
//! Minkowski spacetime.
//!
//! Layers, bottom up: [`spacetime`] geometry, the [`quantum`] state-vector
//! engine, the [`protocol`] scheduler and schemes, the colluding provers in
//! [`adversary`], and the [`harness`] that judges and aggregates rounds.

pub mod adversary;
pub mod harness;
pub mod protocol;
pub mod quantum;
pub mod spacetime;
