//! Replication studies: every method watches the same chain in each
//! replication, and replications run independently on their own streams.

use std::path::Path;

use super::config::{Example, MethodSpec, StudyConfig, TruthSpec};
use super::summary::{summarize_rows, MethodSummary};
use crate::chain::{Method, StopReason};
use crate::diagnostics::{GewekeConfig, GewekeMonitor};
use crate::error::{Error, Result};
use crate::exec::map_replications;
use crate::regeneration::GibbsRegenSpec;
use crate::rng::{stream_rng, stream_seed, SETUP_STREAM};
use crate::samplers::{HierChain, HierModel, ParetoChain, ParetoIndepMh, SampleSource, TwoStateChain, TwoStateSource};
use crate::stopping::{drive, CheckpointPolicy, RunRecord, StopRule, WidthMonitor};

/// Seed of the bundled hierarchical data set (K = 18, μ = −3.3, λ = 0.5, a = 1).
pub const BUNDLED_DATA_SEED: u64 = 1970;

const BUNDLED_DATA: &str = include_str!("../../data/hier_default.csv");

/// Observations shipped with the crate, drawn by
/// `HierModel::synthetic_data(BUNDLED_DATA_SEED, 18, -3.3, 0.5, 1.0)`.
pub fn bundled_hier_data() -> Vec<f64> {
    HierModel::parse_data(BUNDLED_DATA, Path::new("<bundled>")).expect("bundled data parses")
}

/// One method's outcome in one replication. `None` prints as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub rep: u64,
    pub method: String,
    pub n_final: Option<u64>,
    pub r_final: Option<u64>,
    pub estimate: Option<f64>,
    pub half_width: Option<f64>,
    pub covered: Option<bool>,
    pub seed: u64,
}

impl ReplicationRow {
    pub fn failed(&self) -> bool {
        self.estimate.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub config: StudyConfig,
    pub truth: f64,
    /// Monte Carlo standard error of `truth` when it was simulated.
    pub truth_se: Option<f64>,
    /// Regeneration probabilities that had to be clamped to 1, over all reps.
    pub clamp_violations: u64,
    pub rows: Vec<ReplicationRow>,
    pub summary: Vec<MethodSummary>,
}

/// Study-level state shared by every replication.
#[derive(Debug, Clone)]
enum Prepared {
    Pareto(ParetoIndepMh),
    TwoState { chain: TwoStateChain, atom: u8 },
    Hier { model: HierModel, spec: GibbsRegenSpec, coord: usize },
}

impl Prepared {
    fn new(cfg: &StudyConfig) -> Result<Self> {
        Ok(match cfg.example {
            Example::Pareto => Prepared::Pareto(ParetoIndepMh::new(cfg.alpha, cfg.beta, cfg.lambda, cfg.regen_c)?),
            Example::TwoState => Prepared::TwoState { chain: TwoStateChain::new(cfg.p, cfg.q)?, atom: cfg.atom },
            Example::Hier => {
                let y = match &cfg.data_path {
                    Some(path) => HierModel::load_data(path)?,
                    None => bundled_hier_data(),
                };
                let model = HierModel::new(y, cfg.hier_a, cfg.hier_b, cfg.hier_c)?;
                let coord = cfg.theta_index - 1;
                if coord >= model.k() {
                    return Err(Error::invalid(format!(
                        "theta_index {} exceeds K = {}",
                        cfg.theta_index,
                        model.k()
                    )));
                }
                let spec = model.pilot_regen_spec(cfg.pilot_sweeps, &mut stream_rng(cfg.base_seed, SETUP_STREAM))?;
                Prepared::Hier { model, spec, coord }
            }
        })
    }

    fn source(&self, seed: u64) -> Result<Box<dyn SampleSource>> {
        let rng = crate::rng::rng_from_seed(seed);
        Ok(match self {
            Prepared::Pareto(sampler) => Box::new(ParetoChain::new(sampler.clone(), rng)),
            Prepared::TwoState { chain, atom } => Box::new(TwoStateSource::new(*chain, *atom, rng)?),
            Prepared::Hier { model, spec, coord } => {
                Box::new(HierChain::regenerative(model.clone(), spec.clone(), *coord, rng)?)
            }
        })
    }

    fn truth(&self, cfg: &StudyConfig) -> Result<(f64, Option<f64>)> {
        match &cfg.truth {
            TruthSpec::Value(v) => return Ok((*v, None)),
            TruthSpec::File(path) => return read_truth_file(path).map(|v| (v, None)),
            TruthSpec::Auto => {}
        }
        match self {
            Prepared::Pareto(sampler) => Ok((sampler.target_mean(), None)),
            Prepared::TwoState { chain, .. } => Ok((chain.stationary_mean(), None)),
            Prepared::Hier { model, coord, .. } => {
                let mut rng = stream_rng(cfg.base_seed, SETUP_STREAM - 1);
                let (mean, se) = model.iid_posterior_mean(*coord, cfg.truth_draws, &mut rng)?;
                Ok((mean, Some(se)))
            }
        }
    }
}

fn read_truth_file(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path)?;
    let line = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Parse { path: path.to_path_buf(), msg: "no value".into() })?;
    line.parse()
        .map_err(|e| Error::Parse { path: path.to_path_buf(), msg: format!("`{line}`: {e}") })
}

enum Monitor {
    Width(WidthMonitor),
    Geweke(GewekeMonitor),
}

impl StopRule for Monitor {
    fn observe(&mut self, run: &RunRecord, tour_closed: bool) -> Result<bool> {
        match self {
            Monitor::Width(m) => m.observe(run, tour_closed),
            Monitor::Geweke(m) => m.observe(run, tour_closed),
        }
    }

    fn stopped(&self) -> bool {
        match self {
            Monitor::Width(m) => m.stopped(),
            Monitor::Geweke(m) => m.stopped(),
        }
    }
}

fn monitor_for(spec: &MethodSpec, cfg: &StudyConfig) -> Result<Monitor> {
    Ok(match spec {
        MethodSpec::Width(method) => {
            let policy = match method {
                Method::Regenerative => CheckpointPolicy::EveryTour,
                _ => CheckpointPolicy::EveryIterations(cfg.checkpoint),
            };
            Monitor::Width(WidthMonitor::new(*method, &cfg.stopping_config(method)?, policy)?)
        }
        MethodSpec::Geweke { threshold } => {
            let gd = GewekeConfig {
                frac_a: cfg.gd_frac_a,
                frac_b: cfg.gd_frac_b,
                min_n: cfg.gd_min_n,
                p_threshold: *threshold,
            };
            Monitor::Geweke(GewekeMonitor::new(gd, cfg.gd_checkpoint)?)
        }
    })
}

struct RepOutcome {
    rows: Vec<ReplicationRow>,
    clamp_violations: u64,
}

fn replicate(prepared: &Prepared, cfg: &StudyConfig, truth: f64, rep: u64) -> RepOutcome {
    let seed = stream_seed(cfg.base_seed, rep);
    let failed = |spec: &MethodSpec| ReplicationRow {
        rep,
        method: spec.label(),
        n_final: None,
        r_final: None,
        estimate: None,
        half_width: None,
        covered: None,
        seed,
    };
    let attempt = || -> Result<(Vec<Monitor>, RunRecord, u64)> {
        let mut source = prepared.source(seed)?;
        let mut monitors = cfg.methods.iter().map(|m| monitor_for(m, cfg)).collect::<Result<Vec<_>>>()?;
        let mut rules: Vec<&mut dyn StopRule> = monitors.iter_mut().map(|m| m as &mut dyn StopRule).collect();
        let run = drive(&mut source, &mut rules, cfg.cap)?;
        Ok((monitors, run, source.clamp_violations()))
    };
    let Ok((mut monitors, run, clamp_violations)) = attempt() else {
        return RepOutcome { rows: cfg.methods.iter().map(failed).collect(), clamp_violations: 0 };
    };
    let rows = cfg
        .methods
        .iter()
        .zip(monitors.iter_mut())
        .map(|(spec, monitor)| match monitor {
            Monitor::Width(m) => {
                let report = m.finish_capped(&run).clone();
                if !report.half_width.is_finite() {
                    return failed(spec);
                }
                // Capped runs report the full run length so they can be recognized later.
                let n_final = match report.stop_reason {
                    StopReason::Converged => report.iterations,
                    StopReason::Cap => run.len(),
                };
                ReplicationRow {
                    rep,
                    method: spec.label(),
                    n_final: Some(n_final),
                    r_final: report.tours,
                    estimate: Some(report.estimate),
                    half_width: Some(report.half_width),
                    covered: Some((report.estimate - truth).abs() <= report.half_width),
                    seed,
                }
            }
            Monitor::Geweke(m) => {
                let stop = m.finish_capped(&run);
                ReplicationRow {
                    rep,
                    method: spec.label(),
                    n_final: Some(stop.iterations),
                    r_final: None,
                    estimate: Some(stop.estimate),
                    half_width: None,
                    covered: None,
                    seed,
                }
            }
        })
        .collect();
    RepOutcome { rows, clamp_violations }
}

/// The chain that replication `rep` of `cfg` would observe.
pub fn study_source(cfg: &StudyConfig, rep: u64) -> Result<Box<dyn SampleSource>> {
    cfg.validate()?;
    Prepared::new(cfg)?.source(stream_seed(cfg.base_seed, rep))
}

/// Run every replication of `cfg`. `workers` bounds the thread count
/// (`None` uses every core); results do not depend on it.
pub fn run_study(cfg: &StudyConfig, workers: Option<usize>) -> Result<StudyOutput> {
    cfg.validate()?;
    let prepared = Prepared::new(cfg)?;
    let (truth, truth_se) = prepared.truth(cfg)?;
    let outcomes = map_replications(cfg.reps, workers, |rep| replicate(&prepared, cfg, truth, rep));
    let clamp_violations = outcomes.iter().map(|o| o.clamp_violations).sum();
    let rows: Vec<ReplicationRow> = outcomes.into_iter().flat_map(|o| o.rows).collect();
    let summary = summarize_rows(&rows, truth, cfg.cap);
    Ok(StudyOutput { config: cfg.clone(), truth, truth_se, clamp_violations, rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_matches_generator() {
        let generated = HierModel::synthetic_data(BUNDLED_DATA_SEED, 18, -3.3, 0.5, 1.0);
        assert_eq!(bundled_hier_data(), generated);
    }
}
