//! Value types shared by the estimators, samplers and the study harness.
//!
//! Everything here is plain immutable data once built. A trace holds the
//! functional `g(X_i)` evaluated along a run, never the states themselves.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Values `g(X_0), g(X_1), ...` from a single chain run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarTrace {
    values: Vec<f64>,
}

impl ScalarTrace {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("trace value {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl Deref for ScalarTrace {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// One regeneration tour: its length `N_r` and the sum `S_r` of the
/// functional over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tour {
    length: u64,
    sum: f64,
}

impl Tour {
    pub fn new(length: u64, sum: f64) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("tour length must be at least 1"));
        }
        if !sum.is_finite() {
            return Err(Error::invalid("tour sum is not finite"));
        }
        Ok(Self { length, sum })
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }
}

/// Complete tours of a regenerative run, in order.
///
/// Keeps running moments of `D_r = S_r − c N_r`, with `c` the first tour's
/// mean, so the regenerative variance is O(1) per update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TourSet {
    tours: Vec<Tour>,
    total_length: u64,
    total_sum: f64,
    shift: f64,
    sum_d2: f64,
    sum_dn: f64,
    sum_n2: f64,
}

impl TourSet {
    pub fn new(tours: Vec<Tour>) -> Self {
        let mut set = Self::default();
        for t in tours {
            set.push(t);
        }
        set
    }

    pub fn push(&mut self, tour: Tour) {
        if self.tours.is_empty() {
            self.shift = tour.sum / tour.length as f64;
        }
        let n = tour.length as f64;
        let d = tour.sum - self.shift * n;
        self.sum_d2 += d * d;
        self.sum_dn += d * n;
        self.sum_n2 += n * n;
        self.total_length += tour.length;
        self.total_sum += tour.sum;
        self.tours.push(tour);
    }

    /// `Σ (S_r − g N_r)²` for the given `g`.
    pub fn residual_sum_sq(&self, g: f64) -> f64 {
        let d = g - self.shift;
        (self.sum_d2 - 2.0 * d * self.sum_dn + d * d * self.sum_n2).max(0.0)
    }

    pub fn tours(&self) -> &[Tour] {
        &self.tours
    }

    /// Number of tours `R`.
    pub fn count(&self) -> usize {
        self.tours.len()
    }

    /// Total simulation length `τ_R = Σ N_r`.
    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    pub fn total_sum(&self) -> f64 {
        self.total_sum
    }

    pub fn is_empty(&self) -> bool {
        self.tours.is_empty()
    }
}

/// Batch count `a` and batch size `b` for a batch means estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSchedule {
    batches: usize,
    batch_size: usize,
    theta: Option<f64>,
}

impl BatchSchedule {
    /// Batch size `⌊n^θ⌋` and as many full batches as fit.
    pub fn consistent(n: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("theta must lie in (0, 1), got {theta}")));
        }
        if n < 4 {
            return Err(Error::InsufficientSample(format!("n = {n} < 4")));
        }
        let b = floor_power(n, theta);
        if b == 0 {
            return Err(Error::InsufficientSample(format!("floor({n}^{theta}) = 0")));
        }
        let a = n / b;
        if a < 2 {
            return Err(Error::InsufficientSample(format!(
                "n = {n} yields {a} batch(es) of size {b}"
            )));
        }
        Ok(Self { batches: a, batch_size: b, theta: Some(theta) })
    }

    /// A fixed number of batches `a` of size `⌊n/a⌋`.
    pub fn fixed(n: usize, batches: usize) -> Result<Self> {
        if batches < 2 {
            return Err(Error::InsufficientBatches(batches));
        }
        if n < 2 * batches {
            return Err(Error::InsufficientSample(format!(
                "n = {n} < 2a = {}",
                2 * batches
            )));
        }
        Ok(Self { batches, batch_size: n / batches, theta: None })
    }

    /// Build a schedule directly. Both counts are checked, the sample size is not.
    pub fn from_parts(batches: usize, batch_size: usize) -> Result<Self> {
        if batches < 2 {
            return Err(Error::InsufficientBatches(batches));
        }
        if batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(Self { batches, batch_size, theta: None })
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// Number of observations consumed, `a·b`.
    pub fn used(&self) -> usize {
        self.batches * self.batch_size
    }
}

/// `⌊n^θ⌋`, rounding up results that sit a few ulps below an integer
/// (`1000^(1/3)` evaluates to `9.999999999999998`).
fn floor_power(n: usize, theta: f64) -> usize {
    let x = (n as f64).powf(theta);
    (x * (1.0 + 1e-12)).floor() as usize
}

/// Target half-width, confidence and penalty parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Minimum run length `n*` (iterations), or `R*` (tours) for regenerative runs.
    pub n_star: u64,
    pub penalty_c: f64,
    pub penalty_k: f64,
}

impl StoppingConfig {
    pub fn new(epsilon: f64, delta: f64, n_star: u64) -> Result<Self> {
        let cfg = Self { epsilon, delta, n_star, penalty_c: 0.0, penalty_k: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tail_penalty(mut self, c: f64, k: f64) -> Result<Self> {
        self.penalty_c = c;
        self.penalty_k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0, 1)"));
        }
        if self.n_star < 1 {
            return Err(Error::invalid("n_star must be at least 1"));
        }
        if !(self.penalty_c >= 0.0) {
            return Err(Error::invalid("penalty C must be nonnegative"));
        }
        if !(self.penalty_k > 0.5) {
            return Err(Error::invalid("penalty k must exceed 1/2"));
        }
        Ok(())
    }
}

/// Variance estimator driving a fixed-width run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Batch means with a fixed number of batches.
    BatchMeans { batches: usize },
    /// Batch means with batch size `⌊n^θ⌋`.
    ConsistentBatchMeans { theta: f64 },
    /// Regenerative simulation over complete tours.
    Regenerative,
}

/// `x == p/q` exactly for some `q ≤ 12`.
fn small_fraction(x: f64) -> Option<(u32, u32)> {
    (2..=12u32).find_map(|q| (1..q).find(|&p| f64::from(p) / f64::from(q) == x).map(|p| (p, q)))
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::BatchMeans { batches } => write!(f, "bm({batches})"),
            Method::ConsistentBatchMeans { theta } => match small_fraction(*theta) {
                Some((p, q)) => write!(f, "cbm({p}/{q})"),
                None => write!(f, "cbm({theta})"),
            },
            Method::Regenerative => f.write_str("rs"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The half-width plus penalty fell to `ε` or below.
    Converged,
    /// The iteration cap was reached first.
    Cap,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::Cap => "cap",
        })
    }
}

/// Outcome of a fixed-width run.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedWidthReport {
    pub estimate: f64,
    pub variance_estimate: f64,
    pub half_width: f64,
    /// Chain length at the stop (`τ_R` for regenerative runs).
    pub iterations: u64,
    /// Observations (`a·b`) or tours (`R`) behind the half-width.
    pub sample_count: u64,
    /// Completed tours, regenerative runs only.
    pub tours: Option<u64>,
    pub method: Method,
    pub seed: Option<u64>,
    pub stop_reason: StopReason,
}

impl FixedWidthReport {
    pub fn converged(&self) -> bool {
        self.stop_reason == StopReason::Converged
    }
}
