//! Independence Metropolis–Hastings for a Pareto(α, β) target with a
//! Pareto(α, λ) proposal, λ ≤ β.

use rand::Rng;

use super::{SampleSource, Step};
use crate::error::{Error, Result};
use crate::regeneration::IndepMhRegen;
use crate::rng::{open01, SimRng};

/// Inverse-CDF Pareto draw `α u^{-1/shape}` for `u ∈ (0, 1]`.
pub fn pareto_draw(alpha: f64, shape: f64, u: f64) -> f64 {
    alpha * u.powf(-1.0 / shape)
}

/// Result of one sampler transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhStep {
    pub state: f64,
    pub accepted: bool,
    pub accept_prob: f64,
    pub regen_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoIndepMh {
    alpha: f64,
    beta: f64,
    lambda: f64,
    regen: IndepMhRegen,
    state: f64,
}

impl ParetoIndepMh {
    pub fn new(alpha: f64, beta: f64, lambda: f64, regen_c: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !(beta > 1.0) {
            return Err(Error::invalid("beta must exceed 1"));
        }
        if !(lambda > 0.0 && lambda <= beta) {
            return Err(Error::invalid("proposal shape must lie in (0, beta]"));
        }
        Ok(Self { alpha, beta, lambda, regen: IndepMhRegen::new(regen_c)?, state: alpha })
    }

    /// Mean of the target, `αβ/(β − 1)`.
    pub fn target_mean(&self) -> f64 {
        self.alpha * self.beta / (self.beta - 1.0)
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    pub fn set_state(&mut self, x: f64) -> Result<()> {
        if !(x >= self.alpha) {
            return Err(Error::invalid(format!("state {x} below alpha {}", self.alpha)));
        }
        self.state = x;
        Ok(())
    }

    /// `π(x)/ν(x) = (β/λ) α^{β−λ} x^{λ−β}` with both densities normalised.
    pub fn ratio(&self, x: f64) -> f64 {
        self.beta / self.lambda * (self.alpha / x).powf(self.beta - self.lambda)
    }

    /// Acceptance probability `min{1, (x/y)^{β−λ}}` for a move `x → y`.
    pub fn accept_prob(&self, x: f64, y: f64) -> f64 {
        (x / y).powf(self.beta - self.lambda).min(1.0)
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        pareto_draw(self.alpha, self.lambda, open01(rng))
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MhStep {
        let x = self.state;
        let y = self.propose(rng);
        let accept_prob = self.accept_prob(x, y);
        let u: f64 = rng.random();
        let accepted = u < accept_prob;
        let regen_prob = self.regen.prob(self.ratio(x), self.ratio(y), accepted);
        if accepted {
            self.state = y;
        }
        MhStep { state: self.state, accepted, accept_prob, regen_prob }
    }

    /// Draw from the regeneration measure `Q`: a proposal accepted with
    /// probability `min{1, r(y)/c}`.
    pub fn draw_regeneration_state<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let y = self.propose(rng);
            let u: f64 = rng.random();
            if u < self.regen.q_acceptance(self.ratio(y)) {
                return y;
            }
        }
    }
}

/// The sampler as a source of `(x_i, δ_i)` with `g(x) = x`, started from `Q`.
#[derive(Debug, Clone)]
pub struct ParetoChain {
    sampler: ParetoIndepMh,
    rng: SimRng,
}

impl ParetoChain {
    pub fn new(mut sampler: ParetoIndepMh, mut rng: SimRng) -> Self {
        let x0 = sampler.draw_regeneration_state(&mut rng);
        sampler.state = x0;
        Self { sampler, rng }
    }

    pub fn sampler(&self) -> &ParetoIndepMh {
        &self.sampler
    }
}

impl SampleSource for ParetoChain {
    fn next_step(&mut self) -> Result<Option<Step>> {
        let value = self.sampler.state;
        let step = self.sampler.step(&mut self.rng);
        let regen = step.accepted && self.rng.random::<f64>() < step.regen_prob;
        Ok(Some(Step { value, regen }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    fn paper_sampler() -> ParetoIndepMh {
        ParetoIndepMh::new(1.0, 10.0, 9.0, 1.5).unwrap()
    }

    #[test]
    fn draw_examples() {
        assert_eq!(pareto_draw(1.0, 1.0, 0.5), 2.0);
        assert_eq!(pareto_draw(3.0, 2.0, 1.0), 3.0);
        assert!(pareto_draw(1.0, 10.0, 1e-300) >= 1.0);
    }

    #[test]
    fn draw_mean_matches_formula() {
        let mut rng = rng_from_seed(11);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| pareto_draw(1.0, 10.0, open01(&mut rng))).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 10.0 / 9.0).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn acceptance_examples() {
        let s = paper_sampler();
        assert_eq!(s.accept_prob(2.0, 1.0), 1.0);
        assert_relative_eq!(s.accept_prob(1.0, 2.0), 0.5, max_relative = 1e-12);
        let same = ParetoIndepMh::new(1.0, 4.0, 4.0, 1.5).unwrap();
        assert_eq!(same.accept_prob(1.0, 50.0), 1.0);
        assert!(ParetoIndepMh::new(1.0, 9.0, 10.0, 1.5).is_err());
        assert!(ParetoIndepMh::new(1.0, 1.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn ratio_bounded_by_shape_ratio() {
        let s = paper_sampler();
        assert_relative_eq!(s.ratio(1.0), 10.0 / 9.0, max_relative = 1e-12);
        assert!(s.ratio(7.5) < 10.0 / 9.0);
    }

    #[test]
    fn rejected_steps_never_regenerate() {
        let mut s = paper_sampler();
        let mut rng = rng_from_seed(5);
        for _ in 0..10_000 {
            let st = s.step(&mut rng);
            if !st.accepted {
                assert_eq!(st.regen_prob, 0.0);
            } else {
                assert!(st.regen_prob > 0.0 && st.regen_prob <= 1.0);
            }
        }
    }

    #[test]
    fn chain_mean_within_four_standard_errors() {
        // Batch means standard error from the run itself.
        let mut chain = ParetoChain::new(paper_sampler(), rng_from_seed(2024));
        let n = 1_000_000usize;
        let xs: Vec<f64> = (0..n).map(|_| chain.next_step().unwrap().unwrap().value).collect();
        let sched = crate::chain::BatchSchedule::consistent(n, 0.5).unwrap();
        let est = crate::variance::batch_means(&xs, &sched).unwrap();
        let se = (est.sigma2 / sched.used() as f64).sqrt();
        assert!((est.point - 10.0 / 9.0).abs() <= 4.0 * se, "{} vs {}", est.point, se);
    }
}
