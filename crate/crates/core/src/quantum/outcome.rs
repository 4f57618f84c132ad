//! Where measurement outcomes come from.
//!
//! Every probabilistic operation asks an [`OutcomeSource`] to choose among
//! Born-rule probabilities. A seeded RNG samples; [`Forced`] replays a fixed
//! script; [`enumerate_branches`] walks every outcome path with non-zero
//! probability.

use rand::{Rng, RngCore};

use super::QuantumError;

/// Branches with probability at or below this are treated as impossible.
pub const PROB_EPS: f64 = 1e-12;

pub trait OutcomeSource {
    /// Choose an index into `probabilities`, which sum to one.
    fn pick(&mut self, probabilities: &[f64]) -> Result<usize, QuantumError>;
}

impl<R: RngCore + ?Sized> OutcomeSource for R {
    fn pick(&mut self, probabilities: &[f64]) -> Result<usize, QuantumError> {
        let u: f64 = self.random();
        let mut acc = 0.0;
        for (i, p) in probabilities.iter().enumerate() {
            acc += p;
            if u < acc && *p > PROB_EPS {
                return Ok(i);
            }
        }
        // rounding left a sliver above the cumulative sum
        probabilities
            .iter()
            .rposition(|p| *p > PROB_EPS)
            .ok_or(QuantumError::ScriptExhausted)
    }
}

/// A fixed sequence of outcome indices, consumed in call order.
#[derive(Debug, Clone)]
pub struct Forced {
    script: Vec<usize>,
    cursor: usize,
    probability: f64,
}

impl Forced {
    pub fn new(script: impl Into<Vec<usize>>) -> Self {
        Forced { script: script.into(), cursor: 0, probability: 1.0 }
    }

    /// Product of the probabilities of every outcome forced so far.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl OutcomeSource for Forced {
    fn pick(&mut self, probabilities: &[f64]) -> Result<usize, QuantumError> {
        let choice = *self.script.get(self.cursor).ok_or(QuantumError::ScriptExhausted)?;
        let p = probabilities
            .get(choice)
            .copied()
            .ok_or(QuantumError::ImpossibleOutcome { index: choice, probability: 0.0 })?;
        if p <= PROB_EPS {
            return Err(QuantumError::ImpossibleOutcome { index: choice, probability: p });
        }
        self.cursor += 1;
        self.probability *= p;
        Ok(choice)
    }
}

/// One complete outcome path of a probabilistic computation.
#[derive(Debug, Clone)]
pub struct Branch<T> {
    pub choices: Vec<usize>,
    pub probability: f64,
    pub value: T,
}

/// Source used by [`enumerate_branches`]: replays a prefix, then takes the
/// first possible outcome at every further pick.
#[derive(Debug)]
pub struct Scripted {
    prefix: Vec<usize>,
    taken: Vec<(usize, Vec<f64>)>,
}

impl OutcomeSource for Scripted {
    fn pick(&mut self, probabilities: &[f64]) -> Result<usize, QuantumError> {
        let depth = self.taken.len();
        let choice = match self.prefix.get(depth) {
            Some(&c) => c,
            None => probabilities
                .iter()
                .position(|p| *p > PROB_EPS)
                .ok_or(QuantumError::ScriptExhausted)?,
        };
        let p = probabilities.get(choice).copied().unwrap_or(0.0);
        if p <= PROB_EPS {
            return Err(QuantumError::ImpossibleOutcome { index: choice, probability: p });
        }
        self.taken.push((choice, probabilities.to_vec()));
        Ok(choice)
    }
}

impl Scripted {
    fn next_prefix(&self) -> Option<Vec<usize>> {
        for depth in (0..self.taken.len()).rev() {
            let (choice, probs) = &self.taken[depth];
            if let Some(next) = (choice + 1..probs.len()).find(|&c| probs[c] > PROB_EPS) {
                let mut prefix: Vec<usize> = self.taken[..depth].iter().map(|(c, _)| *c).collect();
                prefix.push(next);
                return Some(prefix);
            }
        }
        None
    }
}

/// Runs `run` once per outcome path with non-zero probability.
///
/// `run` must make the same sequence of picks whenever it is given the same
/// earlier outcomes.
pub fn enumerate_branches<T, E, F>(mut run: F) -> Result<Vec<Branch<T>>, E>
where
    F: FnMut(&mut Scripted) -> Result<T, E>,
{
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut src = Scripted { prefix, taken: Vec::new() };
        let value = run(&mut src)?;
        let probability = src.taken.iter().map(|(c, probs)| probs[*c]).product();
        out.push(Branch {
            choices: src.taken.iter().map(|(c, _)| *c).collect(),
            probability,
            value,
        });
        match src.next_prefix() {
            Some(p) => prefix = p,
            None => return Ok(out),
        }
    }
}
