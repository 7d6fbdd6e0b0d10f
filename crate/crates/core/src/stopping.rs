//! Fixed-width sequential stopping.
//!
//! A run is stopped the first time `quantile · σ̂/√n + p(n) ≤ ε`, with the
//! penalty `p(n) = ε I(n ≤ n*) + C n^{-k}` keeping short runs going. For
//! regenerative runs `n` counts tours.

use crate::chain::{BatchSchedule, FixedWidthReport, Method, StopReason, StoppingConfig, Tour, TourSet};
use crate::error::{Error, Result};
use crate::samplers::{SampleSource, Step};
use crate::variance::{batch_means, half_width, rs_variance, VarianceEstimate};

/// Default hard cap on chain length.
pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub epsilon: f64,
    pub n_star: u64,
    pub c: f64,
    pub k: f64,
}

impl PenaltySpec {
    pub fn new(epsilon: f64, n_star: u64) -> Self {
        Self { epsilon, n_star, c: 0.0, k: 1.0 }
    }

    pub fn from_config(cfg: &StoppingConfig) -> Self {
        Self { epsilon: cfg.epsilon, n_star: cfg.n_star, c: cfg.penalty_c, k: cfg.penalty_k }
    }

    pub fn penalty(&self, n: u64) -> f64 {
        penalty(n, self)
    }

    pub fn should_stop(&self, half_width: f64, n: u64) -> bool {
        should_stop(half_width, n, self)
    }
}

/// `p(n) = ε I(n ≤ n*) + C n^{-k}`.
pub fn penalty(n: u64, spec: &PenaltySpec) -> f64 {
    let floor = if n <= spec.n_star { spec.epsilon } else { 0.0 };
    let tail = if spec.c > 0.0 { spec.c * (n as f64).powf(-spec.k) } else { 0.0 };
    floor + tail
}

/// `half_width + p(n) ≤ ε`, never inside the `n ≤ n*` window: there the
/// penalty alone uses up ε, and a zero-width interval (a run of MH
/// rejections, say) would meet the rule with equality.
pub fn should_stop(half_width: f64, n: u64, spec: &PenaltySpec) -> bool {
    n > spec.n_star && half_width + penalty(n, spec) <= spec.epsilon
}

/// When a stopping rule re-evaluates its estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckpointPolicy {
    /// At every multiple of `k` iterations.
    EveryIterations(u64),
    /// Whenever a regeneration tour completes.
    EveryTour,
    /// At `first`, then each time the length grows by `factor`.
    Geometric { first: u64, factor: f64 },
}

impl CheckpointPolicy {
    /// Every 100 iterations for batch means, every tour for regenerative runs.
    pub fn default_for(method: &Method) -> Self {
        match method {
            Method::Regenerative => CheckpointPolicy::EveryTour,
            _ => CheckpointPolicy::EveryIterations(100),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CheckpointPolicy::EveryIterations(0) => Err(Error::invalid("checkpoint interval must be positive")),
            CheckpointPolicy::Geometric { first, factor } if first == 0 || !(factor > 1.0) => {
                Err(Error::invalid("geometric checkpoints need first >= 1 and factor > 1"))
            }
            _ => Ok(()),
        }
    }
}

/// Tracks which iteration counts are checkpoints.
#[derive(Debug, Clone)]
pub(crate) struct Checkpoints {
    policy: CheckpointPolicy,
    next: u64,
}

impl Checkpoints {
    pub(crate) fn new(policy: CheckpointPolicy) -> Result<Self> {
        policy.validate()?;
        let next = match policy {
            CheckpointPolicy::EveryIterations(k) => k,
            CheckpointPolicy::EveryTour => 0,
            CheckpointPolicy::Geometric { first, .. } => first,
        };
        Ok(Self { policy, next })
    }

    /// Whether the run, now `n` long, sits on a checkpoint.
    pub(crate) fn hit(&mut self, n: u64, tour_closed: bool) -> bool {
        match self.policy {
            CheckpointPolicy::EveryTour => tour_closed,
            CheckpointPolicy::EveryIterations(k) => {
                if n >= self.next {
                    self.next = (n / k + 1) * k;
                    true
                } else {
                    false
                }
            }
            CheckpointPolicy::Geometric { factor, .. } => {
                if n >= self.next {
                    self.next = ((self.next as f64 * factor).ceil() as u64).max(n + 1);
                    true
                } else {
                    false
                }
            }
        }
    }
}

/// Everything observed so far along one chain: the values and the
/// completed tours.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    values: Vec<f64>,
    tours: TourSet,
    open_len: u64,
    open_sum: f64,
}

impl RunRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a step; returns whether it closed a tour.
    pub fn push(&mut self, step: Step) -> Result<bool> {
        if !step.value.is_finite() {
            return Err(Error::NonFiniteDraw(format!("g(X_{}) = {}", self.values.len(), step.value)));
        }
        self.values.push(step.value);
        self.open_len += 1;
        self.open_sum += step.value;
        if step.regen {
            self.tours.push(Tour::new(self.open_len, self.open_sum)?);
            self.open_len = 0;
            self.open_sum = 0.0;
        }
        Ok(step.regen)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tours(&self) -> &TourSet {
        &self.tours
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// A stopping rule watching a run step by step.
pub trait StopRule {
    /// Called after every step. Returns true on the step the rule stops.
    fn observe(&mut self, run: &RunRecord, tour_closed: bool) -> Result<bool>;

    fn stopped(&self) -> bool;
}

/// Estimate and run length for `method` on the run so far.
pub fn estimate_run(method: &Method, run: &RunRecord) -> Result<VarianceEstimate> {
    let n = run.values().len();
    match *method {
        Method::BatchMeans { batches } => batch_means(run.values(), &BatchSchedule::fixed(n, batches)?),
        Method::ConsistentBatchMeans { theta } => {
            batch_means(run.values(), &BatchSchedule::consistent(n, theta)?)
        }
        Method::Regenerative => rs_variance(run.tours()),
    }
}

/// Fixed-width rule for one variance estimator.
#[derive(Debug, Clone)]
pub struct WidthMonitor {
    method: Method,
    penalty: PenaltySpec,
    delta: f64,
    checkpoints: Checkpoints,
    report: Option<FixedWidthReport>,
}

impl WidthMonitor {
    pub fn new(method: Method, cfg: &StoppingConfig, policy: CheckpointPolicy) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            method,
            penalty: PenaltySpec::from_config(cfg),
            delta: cfg.delta,
            checkpoints: Checkpoints::new(policy)?,
            report: None,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn report(&self) -> Option<&FixedWidthReport> {
        self.report.as_ref()
    }

    pub fn into_report(self) -> Option<FixedWidthReport> {
        self.report
    }

    fn build_report(&self, run: &RunRecord, reason: StopReason) -> Result<(FixedWidthReport, u64)> {
        let est = estimate_run(&self.method, run)?;
        let hw = half_width(&est, self.delta, est.sample_count)?;
        let (iterations, tours, penalty_n) = match self.method {
            Method::Regenerative => (run.tours().total_length(), Some(est.sample_count), est.sample_count),
            _ => (run.len(), None, run.len()),
        };
        let report = FixedWidthReport {
            estimate: est.point,
            variance_estimate: est.sigma2,
            half_width: hw,
            iterations,
            sample_count: est.sample_count,
            tours,
            method: self.method,
            seed: None,
            stop_reason: reason,
        };
        Ok((report, penalty_n))
    }

    /// Close out a run that hit the cap without stopping.
    pub fn finish_capped(&mut self, run: &RunRecord) -> &FixedWidthReport {
        if self.report.is_none() {
            let report = match self.build_report(run, StopReason::Cap) {
                Ok((r, _)) => r,
                Err(_) => FixedWidthReport {
                    estimate: run.mean(),
                    variance_estimate: f64::NAN,
                    half_width: f64::INFINITY,
                    iterations: run.len(),
                    sample_count: 0,
                    tours: matches!(self.method, Method::Regenerative).then(|| run.tours().count() as u64),
                    method: self.method,
                    seed: None,
                    stop_reason: StopReason::Cap,
                },
            };
            self.report = Some(report);
        }
        self.report.as_ref().expect("report set above")
    }
}

impl StopRule for WidthMonitor {
    fn observe(&mut self, run: &RunRecord, tour_closed: bool) -> Result<bool> {
        if self.report.is_some() || !self.checkpoints.hit(run.len(), tour_closed) {
            return Ok(false);
        }
        // An estimator that cannot be formed yet simply skips this checkpoint.
        let Ok((report, n)) = self.build_report(run, StopReason::Converged) else {
            return Ok(false);
        };
        if self.penalty.should_stop(report.half_width, n) {
            self.report = Some(report);
            return Ok(true);
        }
        Ok(false)
    }

    fn stopped(&self) -> bool {
        self.report.is_some()
    }
}

/// Feed `source` into every rule until all have stopped or the run is
/// `cap` long.
pub fn drive<S: SampleSource + ?Sized>(
    source: &mut S,
    rules: &mut [&mut dyn StopRule],
    cap: u64,
) -> Result<RunRecord> {
    let mut run = RunRecord::new();
    while run.len() < cap && rules.iter().any(|r| !r.stopped()) {
        let Some(step) = source.next_step()? else {
            return Err(Error::SourceExhausted(run.len()));
        };
        let closed = run.push(step)?;
        for rule in rules.iter_mut() {
            if !rule.stopped() {
                rule.observe(&run, closed)?;
            }
        }
    }
    Ok(run)
}

/// Run `source` until the fixed-width rule for `method` is met, or `cap`
/// iterations have been drawn (the report is then flagged as capped).
pub fn run_until_width<S: SampleSource + ?Sized>(
    source: &mut S,
    method: Method,
    cfg: &StoppingConfig,
    policy: CheckpointPolicy,
    cap: u64,
) -> Result<FixedWidthReport> {
    if cap < cfg.n_star {
        return Err(Error::invalid(format!("cap {cap} below n* = {}", cfg.n_star)));
    }
    let mut monitor = WidthMonitor::new(method, cfg, policy)?;
    let run = drive(source, &mut [&mut monitor], cap)?;
    if !monitor.stopped() {
        monitor.finish_capped(&run);
    }
    Ok(monitor.into_report().expect("monitor finished"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::samplers::{ReplaySource, TwoStateChain, TwoStateSource};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec() -> PenaltySpec {
        PenaltySpec::new(0.005, 45)
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty(40, &spec()), 0.005);
        assert_eq!(penalty(46, &spec()), 0.0);
        let tail = PenaltySpec { c: 1.0, k: 1.0, ..spec() };
        assert_relative_eq!(penalty(100, &tail), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn should_stop_examples() {
        assert!(should_stop(0.0049, 2600, &spec()));
        assert!(!should_stop(0.0001, 40, &spec()));
        assert!(!should_stop(0.0060, 1_000_000, &spec()));
        // zero width inside the n* window still does not stop
        assert!(!should_stop(0.0, 45, &spec()));
        assert!(should_stop(0.0, 46, &spec()));
    }

    #[test]
    fn checkpoint_sequences() {
        let mut every = Checkpoints::new(CheckpointPolicy::EveryIterations(100)).unwrap();
        let hits: Vec<u64> = (1..=350).filter(|&n| every.hit(n, false)).collect();
        assert_eq!(hits, vec![100, 200, 300]);

        let mut geo = Checkpoints::new(CheckpointPolicy::Geometric { first: 10, factor: 1.5 }).unwrap();
        let hits: Vec<u64> = (1..=60).filter(|&n| geo.hit(n, false)).collect();
        assert_eq!(hits, vec![10, 15, 23, 35, 53]);

        let mut tours = Checkpoints::new(CheckpointPolicy::EveryTour).unwrap();
        assert!(tours.hit(3, true));
        assert!(!tours.hit(4, false));

        assert!(Checkpoints::new(CheckpointPolicy::EveryIterations(0)).is_err());
        assert!(Checkpoints::new(CheckpointPolicy::Geometric { first: 1, factor: 1.0 }).is_err());
    }

    #[test]
    fn constant_source_stops_at_first_checkpoint_past_n_star() {
        let cfg = StoppingConfig::new(1e-6, 0.05, 45).unwrap();
        let method = Method::ConsistentBatchMeans { theta: 0.5 };
        for (every, first_past) in [(100, 100), (10, 50), (1, 46)] {
            let mut src = ReplaySource::from_values(std::iter::repeat_n(3.0, 10_000));
            let policy = CheckpointPolicy::EveryIterations(every);
            let r = run_until_width(&mut src, method, &cfg, policy, 10_000).unwrap();
            assert_eq!(r.iterations, first_past);
            assert_eq!(r.half_width, 0.0);
            assert_eq!(r.estimate, 3.0);
            assert!(r.converged());
        }
    }

    #[test]
    fn iid_bernoulli_run_length_near_pilot_formula() {
        // σ²_g = 1/4, so n ≈ 1.96² · 0.25 / 0.01² = 9604.
        let cfg = StoppingConfig::new(0.01, 0.05, 1000).unwrap();
        let chain = TwoStateChain::new(0.5, 0.5).unwrap();
        let mut src = TwoStateSource::new(chain, 0, rng_from_seed(17)).unwrap();
        let method = Method::ConsistentBatchMeans { theta: 0.5 };
        let r = run_until_width(&mut src, method, &cfg, CheckpointPolicy::default_for(&method), DEFAULT_CAP)
            .unwrap();
        assert!(r.converged());
        assert!((4802..=19208).contains(&r.iterations), "n = {}", r.iterations);
        assert!(r.half_width <= 0.01);
    }

    #[test]
    fn regenerative_run_reports_tours() {
        let cfg = StoppingConfig::new(0.02, 0.05, 30).unwrap();
        let chain = TwoStateChain::new(0.1, 0.2).unwrap();
        let mut src = TwoStateSource::new(chain, 0, rng_from_seed(8)).unwrap();
        let r = run_until_width(&mut src, Method::Regenerative, &cfg, CheckpointPolicy::EveryTour, DEFAULT_CAP)
            .unwrap();
        let tours = r.tours.unwrap();
        assert!(tours > 30);
        assert_eq!(r.sample_count, tours);
        assert!(r.half_width <= 0.02);
    }

    #[test]
    fn cap_flags_report() {
        let cfg = StoppingConfig::new(1e-9, 0.05, 10).unwrap();
        let chain = TwoStateChain::new(0.3, 0.3).unwrap();
        let mut src = TwoStateSource::new(chain, 0, rng_from_seed(1)).unwrap();
        let r = run_until_width(&mut src, Method::BatchMeans { batches: 30 }, &cfg, CheckpointPolicy::EveryIterations(10), 500)
            .unwrap();
        assert_eq!(r.stop_reason, StopReason::Cap);
        assert_eq!(r.iterations, 500);
        assert!(!r.converged());
    }

    #[test]
    fn exhausted_source_is_an_error() {
        let cfg = StoppingConfig::new(1e-9, 0.05, 10).unwrap();
        let mut src = ReplaySource::from_values((0..50).map(|i| i as f64));
        let err = run_until_width(&mut src, Method::BatchMeans { batches: 2 }, &cfg, CheckpointPolicy::EveryIterations(10), 1000);
        assert!(matches!(err, Err(Error::SourceExhausted(50))));
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let cfg = StoppingConfig::new(0.01, 0.05, 100).unwrap();
        let run = |seed| {
            let chain = TwoStateChain::new(0.2, 0.4).unwrap();
            let mut src = TwoStateSource::new(chain, 0, rng_from_seed(seed)).unwrap();
            run_until_width(&mut src, Method::ConsistentBatchMeans { theta: 1.0 / 3.0 }, &cfg, CheckpointPolicy::EveryIterations(50), DEFAULT_CAP)
                .unwrap()
        };
        let (a, b) = (run(99), run(99));
        assert_eq!(a, b);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    }

    proptest! {
        #[test]
        fn stopping_is_monotone_in_width(h in 0.0f64..0.01, extra in 0.0f64..0.01, n in 1u64..10_000) {
            let s = spec();
            if !should_stop(h, n, &s) {
                prop_assert!(!should_stop(h + extra, n, &s));
            }
        }

        #[test]
        fn never_stops_before_n_star_with_positive_width(h in 1e-12f64..1.0, n in 1u64..=45) {
            prop_assert!(!should_stop(h, n, &spec()));
        }
    }
}
