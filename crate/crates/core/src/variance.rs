//! Point estimates, asymptotic variance estimates and interval half-widths
//! for batch means (fixed or consistent) and regenerative simulation.

use crate::chain::{BatchSchedule, TourSet};
use crate::error::{Error, Result};
use crate::special::{normal_quantile, student_t_quantile};

/// Reference distribution for the interval quantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    /// Student's t with `a - 1` degrees of freedom.
    StudentT { df: u64 },
    StandardNormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    /// The ergodic average the interval is centred on.
    pub point: f64,
    /// `σ̂²_BM` for batch means, `ξ̂²_RS` for regenerative simulation.
    pub sigma2: f64,
    pub kind: IntervalKind,
    /// Observations consumed (`a·b`) or tours (`R`).
    pub sample_count: u64,
}

impl VarianceEstimate {
    pub fn quantile(&self, delta: f64) -> Result<f64> {
        let p = 1.0 - delta / 2.0;
        match self.kind {
            IntervalKind::StudentT { df } => student_t_quantile(df, p),
            IntervalKind::StandardNormal => normal_quantile(p),
        }
    }
}

/// Batch means estimate over the first `a·b` values of `values`.
///
/// The grand mean is taken over the same `a·b` values, so the trailing
/// remainder plays no part in either the point or the variance.
pub fn batch_means(values: &[f64], schedule: &BatchSchedule) -> Result<VarianceEstimate> {
    let a = schedule.batches();
    let b = schedule.batch_size();
    if a < 2 {
        return Err(Error::InsufficientBatches(a));
    }
    if schedule.used() > values.len() {
        return Err(Error::InsufficientSample(format!(
            "schedule needs {} values, trace has {}",
            schedule.used(),
            values.len()
        )));
    }
    let means: Vec<f64> = values[..a * b]
        .chunks_exact(b)
        .map(|c| c.iter().sum::<f64>() / b as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / a as f64;
    let ss: f64 = means.iter().map(|m| (m - grand) * (m - grand)).sum();
    Ok(VarianceEstimate {
        point: grand,
        sigma2: b as f64 / (a - 1) as f64 * ss,
        kind: IntervalKind::StudentT { df: (a - 1) as u64 },
        sample_count: (a * b) as u64,
    })
}

/// Regenerative estimate `ξ̂²_RS = (1/N̄²)(1/R) Σ (S_r − ḡ N_r)²`.
pub fn rs_variance(tours: &TourSet) -> Result<VarianceEstimate> {
    let r = tours.count();
    if r < 2 {
        return Err(Error::InsufficientTours(r));
    }
    let total_len = tours.total_length() as f64;
    let point = tours.total_sum() / total_len;
    let n_bar = total_len / r as f64;
    let ss = tours.residual_sum_sq(point);
    Ok(VarianceEstimate {
        point,
        sigma2: ss / r as f64 / (n_bar * n_bar),
        kind: IntervalKind::StandardNormal,
        sample_count: r as u64,
    })
}

/// Half-width `quantile · σ̂ / √run_length` of a `1 − δ` interval.
pub fn half_width(est: &VarianceEstimate, delta: f64, run_length: u64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} outside (0, 1)")));
    }
    if run_length == 0 {
        return Err(Error::invalid("run length must be positive"));
    }
    if est.sigma2 == 0.0 {
        return Ok(0.0);
    }
    Ok(est.quantile(delta)? * est.sigma2.sqrt() / (run_length as f64).sqrt())
}
