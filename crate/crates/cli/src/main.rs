use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fixedwidth::harness::{self, Example, StudyConfig};
use fixedwidth::special::{normal_quantile, student_t_quantile};
use fixedwidth::regeneration::tours_from_run;
use fixedwidth::{batch_means, half_width, rs_variance, BatchSchedule, ScalarTrace, VarianceEstimate};

#[derive(Parser)]
#[command(name = "fwmc", version, about = "Fixed-width output analysis for MCMC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replication studies.
    Study {
        #[command(subcommand)]
        action: StudyAction,
    },
    /// Write a raw trace as `value,regen` CSV.
    Sample {
        #[arg(long, value_enum)]
        example: ExampleArg,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Optional study config supplying model constants.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// One-shot variance estimate and half-width for a trace CSV.
    Estimate {
        #[arg(long, value_enum)]
        method: EstimatorArg,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Batch count for `bm`.
        #[arg(long, default_value_t = 30)]
        batches: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Normal or Student t quantiles.
    Quantile {
        /// Student t instead of standard normal.
        #[arg(long)]
        t: bool,
        #[arg(long)]
        df: Option<u64>,
        #[arg(long)]
        p: f64,
    },
}

#[derive(Subcommand)]
enum StudyAction {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    Pareto,
    Hier,
    Twostate,
}

impl From<ExampleArg> for Example {
    fn from(e: ExampleArg) -> Self {
        match e {
            ExampleArg::Pareto => Example::Pareto,
            ExampleArg::Hier => Example::Hier,
            ExampleArg::Twostate => Example::TwoState,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Bm,
    Cbm,
    Rs,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Study { action: StudyAction::Run { config, workers, out } } => study_run(&config, workers, out),
        Command::Study { action: StudyAction::Summarize { input } } => {
            let summary = harness::summarize(&input)?;
            print!("{}", harness::format_table(&summary));
            Ok(())
        }
        Command::Sample { example, n, seed, config } => sample(example.into(), n, seed, config.as_deref()),
        Command::Estimate { method, theta, batches, delta, input } => {
            estimate(method, theta, batches, delta, &input)
        }
        Command::Quantile { t, df, p } => {
            let q = match (t, df) {
                (true, Some(df)) => student_t_quantile(df, p)?,
                (true, None) => bail!("--t needs --df"),
                (false, _) => normal_quantile(p)?,
            };
            println!("{q}");
            Ok(())
        }
    }
}

fn study_run(config: &Path, workers: Option<usize>, out: Option<PathBuf>) -> Result<()> {
    if workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let mut cfg = StudyConfig::from_file(config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    let output = harness::run_study(&cfg, workers)?;
    let dir = cfg.output_dir.join("results");
    harness::write_results(&output, &dir)?;
    print!("{}", harness::format_table(&output.summary));
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn sample(example: Example, n: u64, seed: u64, config: Option<&Path>) -> Result<()> {
    let mut cfg = match config {
        Some(path) => StudyConfig::from_file(path)?,
        None => StudyConfig::defaults(example),
    };
    if cfg.example != example {
        bail!("config is for `{}`, not `{example}`", cfg.example);
    }
    cfg.base_seed = seed;
    let mut source = harness::study_source(&cfg, 0)?;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    writeln!(out, "value,regen")?;
    for i in 0..n {
        let step = source.next_step()?.with_context(|| format!("source ended after {i} steps"))?;
        writeln!(out, "{},{}", step.value, u8::from(step.regen))?;
    }
    out.flush()?;
    Ok(())
}

/// First column is the value, an optional second column the 0/1 regeneration flag.
/// A non-numeric first line is taken as a header.
fn read_trace(path: &Path) -> Result<(Vec<f64>, Vec<bool>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let first = fields.next().unwrap_or("");
        let Ok(v) = first.parse::<f64>() else {
            if i == 0 {
                continue;
            }
            bail!("{}: line {}: bad value `{first}`", path.display(), i + 1);
        };
        values.push(v);
        if let Some(flag) = fields.next() {
            flags.push(match flag {
                "1" | "true" => true,
                "0" | "false" => false,
                other => bail!("{}: line {}: bad regeneration flag `{other}`", path.display(), i + 1),
            });
        }
    }
    if !flags.is_empty() && flags.len() != values.len() {
        bail!("{}: regeneration flags missing on some lines", path.display());
    }
    Ok((values, flags))
}

fn estimate(method: EstimatorArg, theta: f64, batches: usize, delta: f64, input: &Path) -> Result<()> {
    let (values, flags) = read_trace(input)?;
    let est: VarianceEstimate = match method {
        EstimatorArg::Bm => batch_means(&values, &BatchSchedule::fixed(values.len(), batches)?)?,
        EstimatorArg::Cbm => batch_means(&values, &BatchSchedule::consistent(values.len(), theta)?)?,
        EstimatorArg::Rs => {
            if flags.is_empty() {
                bail!("rs needs a regeneration flag column");
            }
            let tours = tours_from_run(&ScalarTrace::new(values)?, &flags)?;
            rs_variance(&tours)?
        }
    };
    let hw = half_width(&est, delta, est.sample_count)?;
    let mut out = String::from("estimate,sigma2,sample_count,half_width\n");
    writeln!(out, "{},{},{},{}", est.point, est.sigma2, est.sample_count, hw)?;
    print!("{out}");
    Ok(())
}
