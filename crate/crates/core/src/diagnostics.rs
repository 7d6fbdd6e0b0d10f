//! Geweke-style convergence diagnostic, used as a stopping rule to compare
//! against the fixed-width rules.
//!
//! The z-score compares the means of an early and a late window of the
//! trace. Each window's variance is a consistent batch means estimate with
//! batch size `⌊m^{1/2}⌋`.

use crate::chain::BatchSchedule;
use crate::error::{Error, Result};
use crate::samplers::SampleSource;
use crate::special::normal_cdf;
use crate::stopping::{drive, Checkpoints, CheckpointPolicy, RunRecord, StopRule};
use crate::variance::batch_means;

const WINDOW_THETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeConfig {
    /// Fraction of the trace in the early window.
    pub frac_a: f64,
    /// Fraction of the trace in the late window.
    pub frac_b: f64,
    pub min_n: u64,
    /// Stop once the p-value exceeds this.
    pub p_threshold: f64,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        Self { frac_a: 0.1, frac_b: 0.5, min_n: 120, p_threshold: 0.05 }
    }
}

impl GewekeConfig {
    pub fn with_threshold(p_threshold: f64) -> Self {
        Self { p_threshold, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frac_a > 0.0 && self.frac_b > 0.0 && self.frac_a + self.frac_b <= 1.0) {
            return Err(Error::invalid("window fractions must be positive and sum to at most 1"));
        }
        if self.min_n < 20 {
            return Err(Error::invalid("min_n must be at least 20"));
        }
        if !(self.p_threshold >= 0.0 && self.p_threshold < 1.0) {
            return Err(Error::invalid("p threshold must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeScore {
    pub z: f64,
    pub p_value: f64,
}

fn window_moments(window: &[f64]) -> Result<(f64, f64)> {
    let schedule = BatchSchedule::consistent(window.len(), WINDOW_THETA)
        .map_err(|_| Error::InsufficientWindow(format!("{} values", window.len())))?;
    let est = batch_means(window, &schedule)?;
    Ok((est.point, est.sigma2 / schedule.used() as f64))
}

pub fn geweke_z(values: &[f64], cfg: &GewekeConfig) -> Result<GewekeScore> {
    cfg.validate()?;
    let n = values.len();
    if (n as u64) < cfg.min_n {
        return Err(Error::InsufficientWindow(format!("trace of {n} < min_n {}", cfg.min_n)));
    }
    let n_a = (cfg.frac_a * n as f64).floor() as usize;
    let n_b = (cfg.frac_b * n as f64).floor() as usize;
    let (mean_a, var_a) = window_moments(&values[..n_a])?;
    let (mean_b, var_b) = window_moments(&values[n - n_b..])?;
    let se = (var_a + var_b).sqrt();
    let diff = mean_a - mean_b;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(GewekeScore { z, p_value: 2.0 * normal_cdf(-z.abs()) })
}

/// Outcome of a diagnostic-stopped run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeStop {
    pub iterations: u64,
    pub estimate: f64,
    pub converged: bool,
}

/// Stops at the first checkpoint at or beyond `min_n` whose p-value
/// exceeds the threshold.
#[derive(Debug, Clone)]
pub struct GewekeMonitor {
    cfg: GewekeConfig,
    checkpoints: Checkpoints,
    stop: Option<GewekeStop>,
}

impl GewekeMonitor {
    pub fn new(cfg: GewekeConfig, interval: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, checkpoints: Checkpoints::new(CheckpointPolicy::EveryIterations(interval))?, stop: None })
    }

    pub fn config(&self) -> &GewekeConfig {
        &self.cfg
    }

    pub fn outcome(&self) -> Option<GewekeStop> {
        self.stop
    }

    pub fn finish_capped(&mut self, run: &RunRecord) -> GewekeStop {
        *self.stop.get_or_insert(GewekeStop { iterations: run.len(), estimate: run.mean(), converged: false })
    }
}

impl StopRule for GewekeMonitor {
    fn observe(&mut self, run: &RunRecord, tour_closed: bool) -> Result<bool> {
        if self.stop.is_some() || !self.checkpoints.hit(run.len(), tour_closed) || run.len() < self.cfg.min_n {
            return Ok(false);
        }
        let Ok(score) = geweke_z(run.values(), &self.cfg) else {
            return Ok(false);
        };
        if score.p_value > self.cfg.p_threshold {
            self.stop = Some(GewekeStop { iterations: run.len(), estimate: run.mean(), converged: true });
            return Ok(true);
        }
        Ok(false)
    }

    fn stopped(&self) -> bool {
        self.stop.is_some()
    }
}

/// Run `source` until the diagnostic stops it, or `cap` iterations.
pub fn gd_stopping<S: SampleSource + ?Sized>(
    source: &mut S,
    cfg: &GewekeConfig,
    interval: u64,
    cap: u64,
) -> Result<GewekeStop> {
    let mut monitor = GewekeMonitor::new(*cfg, interval)?;
    let run = drive(source, &mut [&mut monitor], cap)?;
    Ok(monitor.finish_capped(&run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::samplers::ReplaySource;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn constant_trace() {
        let s = geweke_z(&[4.0; 500], &GewekeConfig::default()).unwrap();
        assert_eq!(s.z, 0.0);
        assert_eq!(s.p_value, 1.0);
    }

    #[test]
    fn short_trace_rejected() {
        assert!(matches!(
            geweke_z(&[1.0; 50], &GewekeConfig::default()),
            Err(Error::InsufficientWindow(_))
        ));
        let tiny = GewekeConfig { min_n: 20, frac_a: 0.1, ..GewekeConfig::default() };
        assert!(matches!(geweke_z(&[1.0; 20], &tiny), Err(Error::InsufficientWindow(_))));
    }

    #[test]
    fn null_rejection_rate() {
        let cfg = GewekeConfig::default();
        let rejected = (0..2000u64)
            .filter(|&seed| geweke_z(&normals(seed, 10_000), &cfg).unwrap().p_value < 0.05)
            .count();
        let rate = rejected as f64 / 2000.0;
        assert!((0.03..=0.08).contains(&rate), "rate {rate}");
    }

    #[test]
    fn mean_shift_detected() {
        let mut xs = normals(3, 10_000);
        for x in &mut xs[5000..] {
            *x += 1.0;
        }
        assert!(geweke_z(&xs, &GewekeConfig::default()).unwrap().p_value < 1e-3);
    }

    #[test]
    fn zero_threshold_stops_at_min_n() {
        let cfg = GewekeConfig::with_threshold(0.0);
        let mut src = ReplaySource::from_values(normals(1, 1000));
        let stop = gd_stopping(&mut src, &cfg, 1, 1000).unwrap();
        assert_eq!(stop.iterations, 120);
        assert!(stop.converged);
    }

    proptest! {
        #[test]
        fn z_shift_invariant_and_odd(seed in 0u64..500, shift in -100.0f64..100.0) {
            let xs = normals(seed, 400);
            let cfg = GewekeConfig::default();
            let base = geweke_z(&xs, &cfg).unwrap();
            let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let s = geweke_z(&moved, &cfg).unwrap();
            prop_assert!((s.z - base.z).abs() <= 1e-6 * (1.0 + base.z.abs()));
            let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
            prop_assert_eq!(geweke_z(&neg, &cfg).unwrap().z, -base.z);
        }

        #[test]
        fn p_value_decreasing_in_abs_z(a in 0.0f64..8.0, b in 0.0f64..8.0) {
            let p = |z: f64| 2.0 * normal_cdf(-z.abs());
            if a < b {
                prop_assert!(p(a) >= p(b));
            }
        }
    }
}
