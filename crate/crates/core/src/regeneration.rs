//! Split-chain regeneration: the retrospective regeneration probability for
//! a step `x → y`, its closed forms for the independence sampler and the
//! hierarchical block Gibbs sampler, atom returns, and cutting a run into tours.

use crate::chain::{ScalarTrace, Tour, TourSet};
use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Excess above 1 tolerated before a probability counts as a violation.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// A probability after clamping to `[0, 1]`, with a flag for pre-clamp
/// values beyond the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegenProb {
    pub prob: f64,
    pub exceeded: bool,
}

impl RegenProb {
    fn clamp(raw: f64) -> Self {
        Self { prob: raw.clamp(0.0, 1.0), exceeded: raw > 1.0 + CLAMP_TOLERANCE }
    }
}

/// Minorization `P(x, ·) ≥ s(x) Q(·)` given through densities.
pub struct MinorizationSpec<S> {
    /// `s(x)`, in `[0, 1]`.
    pub s: StateFn<S>,
    /// Density of `Q`, on the same scale as `k`.
    pub q_density: StateFn<S>,
    /// Transition density `k(y | x)`, called as `k(x, y)`.
    pub k_density: PairFn<S>,
}

pub type StateFn<S> = Box<dyn Fn(&S) -> f64 + Send + Sync>;
pub type PairFn<S> = Box<dyn Fn(&S, &S) -> f64 + Send + Sync>;

/// `Pr(δ = 1 | x, y) = s(x) q(y) / k(y | x)`.
pub fn regen_prob_general<S>(x: &S, y: &S, spec: &MinorizationSpec<S>) -> Result<RegenProb> {
    let k = (spec.k_density)(x, y);
    if !(k > 0.0) {
        return Err(Error::ZeroTransitionDensity);
    }
    let sx = (spec.s)(x);
    if !(0.0..=1.0).contains(&sx) {
        return Err(Error::invalid(format!("s(x) = {sx} outside [0, 1]")));
    }
    Ok(RegenProb::clamp(sx * (spec.q_density)(y) / k))
}

/// Regeneration for an independence Metropolis–Hastings sampler with
/// target/proposal ratio `π/ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndepMhRegen {
    pub c: f64,
}

impl IndepMhRegen {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("regeneration constant c = {c} must be positive")));
        }
        Ok(Self { c })
    }

    /// Probability of a regeneration on the step `x → y`, given the ratios
    /// `r(x) = π(x)/ν(x)` and `r(y)`. Rejected steps never regenerate.
    pub fn prob(&self, ratio_x: f64, ratio_y: f64, accepted: bool) -> f64 {
        if !accepted {
            return 0.0;
        }
        let c = self.c;
        let lo = ratio_x.min(ratio_y);
        let hi = ratio_x.max(ratio_y);
        if lo > c {
            c * (1.0 / ratio_x).max(1.0 / ratio_y)
        } else if hi < c {
            hi / c
        } else {
            1.0
        }
    }

    /// Acceptance probability of a draw from `ν` when sampling from the
    /// regeneration measure `Q` by rejection.
    pub fn q_acceptance(&self, ratio: f64) -> f64 {
        (ratio / self.c).min(1.0)
    }
}

/// Free-function form of [`IndepMhRegen::prob`].
pub fn regen_prob_indep_mh<S>(
    x: &S,
    y: &S,
    accepted: bool,
    c: f64,
    ratio: impl Fn(&S) -> f64,
) -> Result<f64> {
    let spec = IndepMhRegen::new(c)?;
    if !accepted {
        return Ok(0.0);
    }
    let (rx, ry) = (ratio(x), ratio(y));
    if !(rx > 0.0 && rx.is_finite() && ry > 0.0 && ry.is_finite()) {
        return Err(Error::invalid("ratio must be finite and positive"));
    }
    Ok(spec.prob(rx, ry, true))
}

/// A regeneration occurs whenever the chain enters the atom.
pub fn atom_regen<S: PartialEq>(next_state: &S, atom: &S) -> bool {
    next_state == atom
}

/// Cut a run into complete tours. `flags[i]` marks a regeneration on the
/// step leaving `X_i`, so a tour ends at every flagged index. Values after
/// the last flag form an incomplete tour and are dropped.
pub fn tours_from_run(trace: &ScalarTrace, flags: &[bool]) -> Result<TourSet> {
    if flags.len() != trace.len() {
        return Err(Error::invalid(format!(
            "{} flags for {} trace values",
            flags.len(),
            trace.len()
        )));
    }
    let mut set = TourSet::default();
    let mut start = 0usize;
    let mut sum = 0.0;
    for (i, (&v, &flag)) in trace.iter().zip(flags).enumerate() {
        sum += v;
        if flag {
            set.push(Tour::new((i + 1 - start) as u64, sum)?);
            start = i + 1;
            sum = 0.0;
        }
    }
    if set.is_empty() {
        return Err(Error::NoRegenerations);
    }
    Ok(set)
}

/// Constants for the block Gibbs sampler of the normal hierarchical model:
/// the fixed point `θ̃`, the box `D = [d1, d2] × [d3, d4]` for `(λ, μ)`, and
/// the inverse-gamma prior `IG(b, c)` on `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsRegenSpec {
    pub theta_tilde: Vec<f64>,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub prior_shape: f64,
    pub prior_rate: f64,
}

impl GibbsRegenSpec {
    pub fn new(
        theta_tilde: Vec<f64>,
        lambda_bounds: (f64, f64),
        mu_bounds: (f64, f64),
        prior_shape: f64,
        prior_rate: f64,
    ) -> Result<Self> {
        let (d1, d2) = lambda_bounds;
        let (d3, d4) = mu_bounds;
        if !(0.0 < d1 && d1 < d2 && d2.is_finite()) {
            return Err(Error::invalid(format!("lambda bounds ({d1}, {d2}) not ordered in (0, inf)")));
        }
        if !(d3 < d4 && d3.is_finite() && d4.is_finite()) {
            return Err(Error::invalid(format!("mu bounds ({d3}, {d4}) not ordered")));
        }
        if theta_tilde.len() < 2 || theta_tilde.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta_tilde must be finite with length >= 2"));
        }
        if !(prior_shape > 0.0 && prior_rate > 0.0) {
            return Err(Error::invalid("prior constants must be positive"));
        }
        Ok(Self { theta_tilde, d1, d2, d3, d4, prior_shape, prior_rate })
    }

    pub fn contains(&self, lambda: f64, mu: f64) -> bool {
        (self.d1..=self.d2).contains(&lambda) && (self.d3..=self.d4).contains(&mu)
    }

    /// `ln f(λ, μ | θ)`: inverse-gamma density of `λ | θ` times the normal
    /// density of `μ | θ, λ`.
    pub fn ln_joint_density(&self, lambda: f64, mu: f64, theta: &[f64]) -> f64 {
        let k = theta.len() as f64;
        let mean = theta.iter().sum::<f64>() / k;
        let ss: f64 = theta.iter().map(|t| (t - mean) * (t - mean)).sum();
        let shape = self.prior_shape + 0.5 * (k - 1.0);
        let rate = self.prior_rate + 0.5 * ss;
        let ln_ig = shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * lambda.ln() - rate / lambda;
        let var = lambda / k;
        let ln_norm =
            -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (mu - mean) * (mu - mean) / (2.0 * var);
        ln_ig + ln_norm
    }

    /// `ln inf_D f(λ, μ | θ') / f(λ, μ | θ̃)`.
    ///
    /// The ratio is `C · exp{(V(θ̃, μ) − V(θ', μ)) / 2λ}` where `C` is the
    /// ratio of the inverse-gamma normalising constants, which do not depend
    /// on `(λ, μ)`. The exponent is linear in `μ` and its sign decides the
    /// extreme `λ`, giving the corner `(λ̂, μ̂)`.
    pub fn ln_ratio_infimum(&self, theta_prev: &[f64]) -> f64 {
        let tt = &self.theta_tilde;
        let k = tt.len() as f64;
        let mean_prev = theta_prev.iter().sum::<f64>() / k;
        let mean_tilde = tt.iter().sum::<f64>() / k;
        let mu_hat = if mean_prev <= mean_tilde { self.d4 } else { self.d3 };
        let v_tilde = sum_sq_about(tt, mu_hat);
        let v_prev = sum_sq_about(theta_prev, mu_hat);
        let lambda_hat = if v_prev <= v_tilde { self.d2 } else { self.d1 };

        let shape = self.prior_shape + 0.5 * (k - 1.0);
        let rate_prev = self.prior_rate + 0.5 * sum_sq_about(theta_prev, mean_prev);
        let rate_tilde = self.prior_rate + 0.5 * sum_sq_about(tt, mean_tilde);
        shape * (rate_prev / rate_tilde).ln() + (v_tilde - v_prev) / (2.0 * lambda_hat)
    }
}

/// `V(θ, μ) = Σ (θ_i − μ)²`.
fn sum_sq_about(theta: &[f64], mu: f64) -> f64 {
    theta.iter().map(|t| (t - mu) * (t - mu)).sum()
}

/// Regeneration probability for the transition `(λ', μ', θ') → (λ, μ, θ)`
/// of the block Gibbs sampler. Zero outside `D`.
pub fn gibbs_regen_prob(
    theta_prev: &[f64],
    lambda: f64,
    mu: f64,
    spec: &GibbsRegenSpec,
) -> Result<RegenProb> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
    }
    if theta_prev.len() != spec.theta_tilde.len() {
        return Err(Error::invalid("theta length does not match theta_tilde"));
    }
    if !spec.contains(lambda, mu) {
        return Ok(RegenProb { prob: 0.0, exceeded: false });
    }
    let ln_p = spec.ln_ratio_infimum(theta_prev) + spec.ln_joint_density(lambda, mu, &spec.theta_tilde)
        - spec.ln_joint_density(lambda, mu, theta_prev);
    Ok(RegenProb::clamp(ln_p.exp()))
}
