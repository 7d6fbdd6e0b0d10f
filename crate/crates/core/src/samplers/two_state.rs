//! Two-state Markov chain with closed-form stationary mean and asymptotic
//! variance; the reference chain for checking the variance estimators.

use rand::Rng;

use super::{SampleSource, Step};
use crate::error::{Error, Result};
use crate::regeneration::atom_regen;
use crate::rng::SimRng;

/// `P(0 → 1) = p`, `P(1 → 0) = q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateChain {
    p: f64,
    q: f64,
}

impl TwoStateChain {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !(open(p) && open(q)) {
            return Err(Error::invalid(format!("transition probabilities ({p}, {q}) must lie in (0, 1)")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `π(1) = p/(p+q)`, the stationary mean of `g(x) = x`.
    pub fn stationary_mean(&self) -> f64 {
        self.p / (self.p + self.q)
    }

    pub fn stationary_prob(&self, state: u8) -> f64 {
        if state == 0 {
            1.0 - self.stationary_mean()
        } else {
            self.stationary_mean()
        }
    }

    /// `σ²_g = pq(2 − p − q)/(p + q)³` for `g(x) = x`.
    pub fn asymptotic_variance(&self) -> f64 {
        let (p, q) = (self.p, self.q);
        p * q * (2.0 - p - q) / (p + q).powi(3)
    }

    /// Lag-`k` autocorrelation `(1 − p − q)^k`.
    pub fn autocorrelation(&self, lag: i32) -> f64 {
        (1.0 - self.p - self.q).powi(lag)
    }

    pub fn step<R: Rng + ?Sized>(&self, state: u8, rng: &mut R) -> u8 {
        let u: f64 = rng.random();
        match state {
            0 if u < self.p => 1,
            0 => 0,
            _ if u < self.q => 0,
            _ => 1,
        }
    }
}

/// The chain as a source of `g(x) = x` with regenerations on entering `atom`.
/// Runs start at the atom.
#[derive(Debug, Clone)]
pub struct TwoStateSource {
    chain: TwoStateChain,
    state: u8,
    atom: u8,
    rng: SimRng,
}

impl TwoStateSource {
    pub fn new(chain: TwoStateChain, atom: u8, rng: SimRng) -> Result<Self> {
        if atom > 1 {
            return Err(Error::invalid("atom must be 0 or 1"));
        }
        Ok(Self { chain, state: atom, atom, rng })
    }
}

impl SampleSource for TwoStateSource {
    fn next_step(&mut self) -> Result<Option<Step>> {
        let value = f64::from(self.state);
        self.state = self.chain.step(self.state, &mut self.rng);
        Ok(Some(Step { value, regen: atom_regen(&self.state, &self.atom) }))
    }
}
