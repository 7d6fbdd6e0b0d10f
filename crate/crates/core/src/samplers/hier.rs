//! Conditionally independent normal hierarchical model
//!
//! ```text
//! Y_i | θ_i ~ N(θ_i, a)      θ_i | μ, λ ~ N(μ, λ)      λ ~ IG(b, c)      f(μ) ∝ 1
//! ```
//!
//! with a block Gibbs sampler, an exact accept-reject sampler for the
//! posterior, and a regenerative source built on the Gibbs sampler.

use std::path::Path;

use rand::Rng;

use super::variates::{finite, inv_gamma, normal};
use super::{SampleSource, Step};
use crate::error::{Error, Result};
use crate::regeneration::{gibbs_regen_prob, GibbsRegenSpec};
use crate::rng::{rng_from_seed, SimRng};

/// Proposal budget for a single accept-reject draw.
pub const MAX_PROPOSALS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HierModel {
    y: Vec<f64>,
    a: f64,
    b: f64,
    c: f64,
    y_bar: f64,
    s2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierState {
    pub lambda: f64,
    pub mu: f64,
    pub theta: Vec<f64>,
}

impl HierModel {
    /// `a` is the observation variance, `IG(b, c)` the prior on `λ`.
    pub fn new(y: Vec<f64>, a: f64, b: f64, c: f64) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::invalid("the model needs at least two observations"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations must be finite"));
        }
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(Error::invalid("model constants a, b, c must be positive"));
        }
        let k = y.len() as f64;
        let y_bar = y.iter().sum::<f64>() / k;
        let s2 = y.iter().map(|v| (v - y_bar) * (v - y_bar)).sum();
        Ok(Self { y, a, b, c, y_bar, s2 })
    }

    /// Read observations from a file with one number per line; `#` starts a comment.
    pub fn load_data(path: &Path) -> Result<Vec<f64>> {
        Self::parse_data(&std::fs::read_to_string(path)?, path)
    }

    /// Parse file text as [`HierModel::load_data`] does; `origin` labels errors.
    pub fn parse_data(text: &str, origin: &Path) -> Result<Vec<f64>> {
        text.lines()
            .enumerate()
            .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                l.parse::<f64>().map_err(|e| Error::Parse {
                    path: origin.to_path_buf(),
                    msg: format!("line {}: {e}", i + 1),
                })
            })
            .collect()
    }

    /// Data simulated from the model itself: `θ_i ~ N(μ, λ)`, `y_i ~ N(θ_i, a)`.
    pub fn synthetic_data(seed: u64, k: usize, mu: f64, lambda: f64, a: f64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..k)
            .map(|_| {
                let theta = normal(&mut rng, mu, lambda);
                normal(&mut rng, theta, a)
            })
            .collect()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn y_bar(&self) -> f64 {
        self.y_bar
    }

    /// `s² = Σ (y_i − ȳ)²`.
    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// Shape and rate of `λ | θ, y ~ IG(b + (K−1)/2, c + Σ(θ_i − θ̄)²/2)`.
    pub fn lambda_conditional(&self, theta: &[f64]) -> (f64, f64) {
        let k = theta.len() as f64;
        let mean = theta.iter().sum::<f64>() / k;
        let ss: f64 = theta.iter().map(|t| (t - mean) * (t - mean)).sum();
        (self.b + 0.5 * (k - 1.0), self.c + 0.5 * ss)
    }

    /// Mean and variance of `θ_i | λ, μ, y`.
    pub fn theta_conditional(&self, i: usize, lambda: f64, mu: f64) -> (f64, f64) {
        let a = self.a;
        ((lambda * self.y[i] + a * mu) / (lambda + a), a * lambda / (lambda + a))
    }

    fn draw_theta<R: Rng + ?Sized>(&self, rng: &mut R, lambda: f64, mu: f64) -> Result<Vec<f64>> {
        (0..self.k())
            .map(|i| {
                let (m, v) = self.theta_conditional(i, lambda, mu);
                finite(normal(rng, m, v), "theta")
            })
            .collect()
    }

    /// One block Gibbs transition: `λ | θ'`, then `μ | θ', λ`, then `θ | λ, μ`.
    pub fn gibbs_sweep<R: Rng + ?Sized>(&self, prev: &HierState, rng: &mut R) -> Result<HierState> {
        let (lambda, mu) = self.draw_lambda_mu(&prev.theta, rng)?;
        let theta = self.draw_theta(rng, lambda, mu)?;
        Ok(HierState { lambda, mu, theta })
    }

    fn draw_lambda_mu<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<(f64, f64)> {
        let (shape, rate) = self.lambda_conditional(theta);
        let lambda = finite(inv_gamma(rng, shape, rate)?, "lambda")?;
        if !(lambda > 0.0) {
            return Err(Error::NonFiniteDraw(format!("lambda = {lambda}")));
        }
        let k = theta.len() as f64;
        let mean = theta.iter().sum::<f64>() / k;
        let mu = finite(normal(rng, mean, lambda / k), "mu")?;
        Ok((lambda, mu))
    }

    /// Maximiser of `h` over `λ ≥ 0`: `max{0, s²/(K−1) − a}`.
    pub fn lambda_hat(&self) -> f64 {
        (self.s2 / (self.k() as f64 - 1.0) - self.a).max(0.0)
    }

    /// `ln h(λ)` with `h(λ) = (λ + a)^{(1−K)/2} exp{−s²/(2(λ + a))}`.
    pub fn ln_h(&self, lambda: f64) -> f64 {
        let t = lambda + self.a;
        0.5 * (1.0 - self.k() as f64) * t.ln() - self.s2 / (2.0 * t)
    }

    /// Unnormalised `ln π(λ | y)`.
    pub fn ln_lambda_posterior(&self, lambda: f64) -> f64 {
        -(self.b + 1.0) * lambda.ln() - self.c / lambda + self.ln_h(lambda)
    }

    /// Accept-reject sampler for the marginal posterior of `λ`.
    pub fn lambda_sampler(&self) -> LambdaSampler<'_> {
        LambdaSampler { model: self, ln_m: self.ln_h(self.lambda_hat()), proposals: 0, draws: 0 }
    }

    /// Exact posterior draw: `λ | y` by accept-reject, `μ | λ, y ~ N(ȳ, (λ+a)/K)`,
    /// then `θ | λ, μ, y`.
    pub fn iid_posterior_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<HierState> {
        self.lambda_sampler().posterior_draw(rng)
    }

    /// Posterior mean of `θ_coord` from `draws` exact draws.
    pub fn iid_posterior_mean(&self, coord: usize, draws: u64, rng: &mut SimRng) -> Result<(f64, f64)> {
        if coord >= self.k() {
            return Err(Error::invalid(format!("coordinate {coord} out of range")));
        }
        let mut sampler = self.lambda_sampler();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let s = sampler.posterior_draw(rng)?;
            let v = s.theta[coord];
            sum += v;
            sum_sq += v * v;
        }
        let n = draws as f64;
        let mean = sum / n;
        let var = (sum_sq - n * mean * mean) / (n - 1.0);
        Ok((mean, (var / n).sqrt()))
    }

    /// Pilot Gibbs run locating the fixed point `θ̃` and the box `D`:
    /// `d1 = max{.01, λ̃ − .5 S_λ}`, `d2 = λ̃ + .5 S_λ`, `d3 = μ̃ − S_μ`, `d4 = μ̃ + S_μ`.
    pub fn pilot_regen_spec<R: Rng + ?Sized>(&self, sweeps: usize, rng: &mut R) -> Result<GibbsRegenSpec> {
        if sweeps < 2 {
            return Err(Error::invalid("pilot run needs at least two sweeps"));
        }
        let k = self.k();
        let mut state = HierState { lambda: 1.0, mu: self.y_bar, theta: self.y.clone() };
        let mut lambdas = Vec::with_capacity(sweeps);
        let mut mus = Vec::with_capacity(sweeps);
        let mut theta_sum = vec![0.0; k];
        for _ in 0..sweeps {
            state = self.gibbs_sweep(&state, rng)?;
            lambdas.push(state.lambda);
            mus.push(state.mu);
            for (acc, t) in theta_sum.iter_mut().zip(&state.theta) {
                *acc += t;
            }
        }
        let (l_mean, l_sd) = mean_sd(&lambdas);
        let (m_mean, m_sd) = mean_sd(&mus);
        let theta_tilde = theta_sum.into_iter().map(|s| s / sweeps as f64).collect();
        GibbsRegenSpec::new(
            theta_tilde,
            ((l_mean - 0.5 * l_sd).max(0.01), l_mean + 0.5 * l_sd),
            (m_mean - m_sd, m_mean + m_sd),
            self.b,
            self.c,
        )
    }

    /// Draw from the regeneration measure: `(λ, μ) ~ f(· | θ̃)` restricted
    /// to `D` by rejection, then `θ | λ, μ`.
    pub fn draw_regeneration_state<R: Rng + ?Sized>(
        &self,
        spec: &GibbsRegenSpec,
        rng: &mut R,
    ) -> Result<HierState> {
        for _ in 0..MAX_PROPOSALS {
            let (lambda, mu) = self.draw_lambda_mu(&spec.theta_tilde, rng)?;
            if spec.contains(lambda, mu) {
                let theta = self.draw_theta(rng, lambda, mu)?;
                return Ok(HierState { lambda, mu, theta });
            }
        }
        Err(Error::AcceptRejectExhausted(MAX_PROPOSALS))
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Accept-reject for `π(λ | y)` with an `IG(b, c)` candidate and bound
/// `M = h(λ̂)`.
#[derive(Debug)]
pub struct LambdaSampler<'m> {
    model: &'m HierModel,
    ln_m: f64,
    proposals: u64,
    draws: u64,
}

impl LambdaSampler<'_> {
    pub fn ln_bound(&self) -> f64 {
        self.ln_m
    }

    /// Proposals made and draws accepted so far.
    pub fn counts(&self) -> (u64, u64) {
        (self.proposals, self.draws)
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        let m = self.model;
        for _ in 0..MAX_PROPOSALS {
            self.proposals += 1;
            let lambda = inv_gamma(rng, m.b, m.c)?;
            let ln_ratio = m.ln_h(lambda) - self.ln_m;
            if ln_ratio > 1e-12 {
                return Err(Error::invalid(format!(
                    "accept-reject bound violated at lambda = {lambda}: ln h - ln M = {ln_ratio}"
                )));
            }
            let u: f64 = rng.random();
            if u.ln() < ln_ratio {
                self.draws += 1;
                return finite(lambda, "lambda");
            }
        }
        Err(Error::AcceptRejectExhausted(MAX_PROPOSALS))
    }

    pub fn posterior_draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<HierState> {
        let lambda = self.draw(rng)?;
        let m = self.model;
        let mu = finite(normal(rng, m.y_bar, (lambda + m.a) / m.k() as f64), "mu")?;
        let theta = m.draw_theta(rng, lambda, mu)?;
        Ok(HierState { lambda, mu, theta })
    }
}

/// Block Gibbs output `g = θ_coord` with optional regeneration flags.
///
/// With a regeneration spec the run starts from the regeneration measure;
/// otherwise it starts from the supplied state.
#[derive(Debug, Clone)]
pub struct HierChain {
    model: HierModel,
    regen: Option<GibbsRegenSpec>,
    coord: usize,
    state: HierState,
    rng: SimRng,
    clamp_violations: u64,
}

impl HierChain {
    pub fn regenerative(model: HierModel, spec: GibbsRegenSpec, coord: usize, mut rng: SimRng) -> Result<Self> {
        if coord >= model.k() || spec.theta_tilde.len() != model.k() {
            return Err(Error::invalid("coordinate or theta_tilde does not fit the model"));
        }
        let state = model.draw_regeneration_state(&spec, &mut rng)?;
        Ok(Self { model, regen: Some(spec), coord, state, rng, clamp_violations: 0 })
    }

    pub fn plain(model: HierModel, start: HierState, coord: usize, rng: SimRng) -> Result<Self> {
        if coord >= model.k() || start.theta.len() != model.k() {
            return Err(Error::invalid("coordinate or start state does not fit the model"));
        }
        Ok(Self { model, regen: None, coord, state: start, rng, clamp_violations: 0 })
    }

    pub fn state(&self) -> &HierState {
        &self.state
    }
}

impl SampleSource for HierChain {
    fn next_step(&mut self) -> Result<Option<Step>> {
        let value = self.state.theta[self.coord];
        let (lambda, mu) = self.model.draw_lambda_mu(&self.state.theta, &mut self.rng)?;
        let prob = match &self.regen {
            Some(spec) => {
                let p = gibbs_regen_prob(&self.state.theta, lambda, mu, spec)?;
                self.clamp_violations += u64::from(p.exceeded);
                p.prob
            }
            None => 0.0,
        };
        let theta = self.model.draw_theta(&mut self.rng, lambda, mu)?;
        self.state = HierState { lambda, mu, theta };
        let regen = prob > 0.0 && self.rng.random::<f64>() < prob;
        Ok(Some(Step { value, regen }))
    }

    fn clamp_violations(&self) -> u64 {
        self.clamp_violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model_with(y: Vec<f64>) -> HierModel {
        HierModel::new(y, 1.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn lambda_conditional_matches_k18_form() {
        let y: Vec<f64> = (0..18).map(|i| i as f64 * 0.1).collect();
        let m = model_with(y);
        let theta: Vec<f64> = (0..18).map(|i| (i as f64).sin()).collect();
        let mean = theta.iter().sum::<f64>() / 18.0;
        let ss: f64 = theta.iter().map(|t| (t - mean).powi(2)).sum();
        let (shape, rate) = m.lambda_conditional(&theta);
        assert_eq!(shape, 2.0 + 17.0 / 2.0);
        assert_relative_eq!(rate, 2.0 + ss / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn theta_conditional_limits() {
        let m = model_with(vec![1.0, -2.0, 0.5]);
        let (mean, _) = m.theta_conditional(1, 1e12, 3.0);
        assert_relative_eq!(mean, -2.0, max_relative = 1e-9);
        let (mean, var) = m.theta_conditional(0, 1.0, 3.0);
        assert_relative_eq!(mean, (1.0 + 3.0) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(var, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn lambda_hat_examples() {
        // K = 18, s² = 34 → 34/17 − 1 = 1
        // one value of 6 among zeros: s² = 36 · 17/18
        let mut y = vec![0.0; 18];
        y[0] = 6.0;
        let m = model_with(y);
        assert_relative_eq!(m.s2(), 34.0, max_relative = 1e-12);
        assert_relative_eq!(m.lambda_hat(), 1.0, max_relative = 1e-12);

        let flat = model_with(vec![2.5; 18]);
        assert_eq!(flat.lambda_hat(), 0.0);
        assert_relative_eq!(flat.lambda_sampler().ln_bound(), -8.5 * 1f64.ln(), epsilon = 1e-15);
        let flat_a = HierModel::new(vec![2.5; 18], 3.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(flat_a.lambda_sampler().ln_bound(), -8.5 * 3f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn bound_dominates_h() {
        let y = HierModel::synthetic_data(1, 18, 0.0, 2.0, 1.0);
        let m = model_with(y);
        let ln_m = m.lambda_sampler().ln_bound();
        for i in 0..10_000 {
            let lambda = i as f64 * 1e-3;
            assert!(m.ln_h(lambda) <= ln_m + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_models() {
        assert!(HierModel::new(vec![1.0], 1.0, 2.0, 2.0).is_err());
        assert!(HierModel::new(vec![1.0, 2.0], 0.0, 2.0, 2.0).is_err());
        assert!(HierModel::new(vec![1.0, f64::NAN], 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn regeneration_start_lies_in_box() {
        let y = HierModel::synthetic_data(9, 18, -3.0, 0.5, 1.0);
        let m = model_with(y);
        let mut rng = rng_from_seed(4);
        let spec = m.pilot_regen_spec(500, &mut rng).unwrap();
        for _ in 0..100 {
            let s = m.draw_regeneration_state(&spec, &mut rng).unwrap();
            assert!(spec.contains(s.lambda, s.mu));
        }
    }

    #[test]
    fn regenerative_chain_regenerates() {
        let y = HierModel::synthetic_data(9, 18, -3.0, 0.5, 1.0);
        let m = model_with(y);
        let mut rng = rng_from_seed(4);
        let spec = m.pilot_regen_spec(1000, &mut rng).unwrap();
        let mut chain = HierChain::regenerative(m, spec, 8, rng_from_seed(5)).unwrap();
        let regens = (0..5000).filter(|_| chain.next_step().unwrap().unwrap().regen).count();
        assert!(regens > 50, "only {regens} regenerations");
        assert_eq!(chain.clamp_violations(), 0);
    }
}
