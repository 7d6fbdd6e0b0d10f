//! Example Markov chains and the step-by-step source interface the
//! stopping rules consume.

pub mod hier;
pub mod pareto;
pub mod two_state;
mod variates;

pub use hier::{HierChain, HierModel, HierState};
pub use pareto::{pareto_draw, ParetoChain, ParetoIndepMh};
pub use two_state::{TwoStateChain, TwoStateSource};

use crate::error::Result;

/// One observation `g(X_i)` and the regeneration flag `δ_i` of the step
/// leaving `X_i`. Sources without a regeneration scheme report `false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub value: f64,
    pub regen: bool,
}

/// An incremental source of chain output.
pub trait SampleSource {
    /// `Ok(None)` once the source has nothing more to give.
    fn next_step(&mut self) -> Result<Option<Step>>;

    /// Regeneration probabilities that exceeded 1 before clamping.
    fn clamp_violations(&self) -> u64 {
        0
    }
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn next_step(&mut self) -> Result<Option<Step>> {
        (**self).next_step()
    }

    fn clamp_violations(&self) -> u64 {
        (**self).clamp_violations()
    }
}

impl<S: SampleSource + ?Sized> SampleSource for Box<S> {
    fn next_step(&mut self) -> Result<Option<Step>> {
        (**self).next_step()
    }

    fn clamp_violations(&self) -> u64 {
        (**self).clamp_violations()
    }
}

/// Wraps a finite list of steps, e.g. a trace read from disk.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    steps: std::vec::IntoIter<Step>,
}

impl ReplaySource {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps: steps.into_iter() }
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        Self::new(values.into_iter().map(|value| Step { value, regen: false }).collect())
    }
}

impl SampleSource for ReplaySource {
    fn next_step(&mut self) -> Result<Option<Step>> {
        Ok(self.steps.next())
    }
}
