//! Fixed-width stopping rules for Markov chain Monte Carlo.
//!
//! The crate estimates the asymptotic variance of an ergodic average with
//! batch means (fixed batch count or batch size `⌊n^θ⌋`) or regenerative
//! simulation, and stops a run once the confidence interval is narrow
//! enough. It ships the example samplers and a replication harness that
//! measures coverage, half-width and run length.

// `!(x > 0.0)` is used on purpose so that NaN fails the same checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod harness;
pub mod regeneration;
pub mod rng;
pub mod samplers;
#[allow(clippy::excessive_precision)]
pub mod special;
pub mod stopping;
pub mod variance;

pub use chain::{BatchSchedule, FixedWidthReport, Method, ScalarTrace, StopReason, StoppingConfig, Tour, TourSet};
pub use error::{Error, Result};
pub use stopping::{run_until_width, CheckpointPolicy, PenaltySpec};
pub use variance::{batch_means, half_width, rs_variance, VarianceEstimate};
