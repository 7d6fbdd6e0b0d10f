//! Study configuration: plain `key = value` lines, `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::chain::Method;
use crate::error::{Error, Result};
use crate::stopping::DEFAULT_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Pareto,
    Hier,
    TwoState,
}

impl FromStr for Example {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pareto" => Ok(Example::Pareto),
            "hier" => Ok(Example::Hier),
            "twostate" => Ok(Example::TwoState),
            other => Err(format!("unknown example `{other}` (pareto, hier, twostate)")),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::Pareto => "pareto",
            Example::Hier => "hier",
            Example::TwoState => "twostate",
        })
    }
}

/// A stopping method in a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Width(Method),
    /// Geweke diagnostic with a p-value cutoff.
    Geweke { threshold: f64 },
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Width(m) => m.to_string(),
            MethodSpec::Geweke { threshold } => format!("gd({threshold})"),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Accepts `0.5` or `1/3`.
pub fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            num / den
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("bad number `{s}`"))
    }
}

impl FromStr for MethodSpec {
    type Err = String;

    /// `bm30`, `bm(A)`, `cbm(θ)`, `rs` or `gd(p)`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        if s == "rs" {
            return Ok(MethodSpec::Width(Method::Regenerative));
        }
        if s == "bm30" {
            return Ok(MethodSpec::Width(Method::BatchMeans { batches: 30 }));
        }
        if let Some(a) = arg("bm") {
            let batches: usize = a.trim().parse().map_err(|_| format!("bad batch count in `{s}`"))?;
            if batches < 2 {
                return Err(format!("`{s}`: need at least 2 batches"));
            }
            return Ok(MethodSpec::Width(Method::BatchMeans { batches }));
        }
        if let Some(t) = arg("cbm") {
            let theta = parse_fraction(t)?;
            if !(theta > 0.0 && theta < 1.0) {
                return Err(format!("`{s}`: theta must lie in (0, 1)"));
            }
            return Ok(MethodSpec::Width(Method::ConsistentBatchMeans { theta }));
        }
        if let Some(p) = arg("gd") {
            let threshold = parse_fraction(p)?;
            if !(0.0..1.0).contains(&threshold) {
                return Err(format!("`{s}`: threshold must lie in [0, 1)"));
            }
            return Ok(MethodSpec::Geweke { threshold });
        }
        Err(format!("unknown method `{s}` (bm30, bm(A), cbm(theta), rs, gd(p))"))
    }
}

/// Where the true value of `E_π g` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthSpec {
    /// Closed form (pareto, twostate) or exact posterior draws (hier).
    Auto,
    Value(f64),
    /// A file whose first non-empty line is the value.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub example: Example,
    pub methods: Vec<MethodSpec>,
    pub epsilon: f64,
    pub delta: f64,
    pub n_star: u64,
    pub r_star: u64,
    pub penalty_c: f64,
    pub penalty_k: f64,
    pub reps: u64,
    pub base_seed: u64,
    pub truth: TruthSpec,
    pub output_dir: PathBuf,
    /// Iterations between batch means checkpoints.
    pub checkpoint: u64,
    pub cap: u64,

    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub regen_c: f64,

    pub p: f64,
    pub q: f64,
    pub atom: u8,

    /// Data file for the hierarchical model; the bundled data set when absent.
    pub data_path: Option<PathBuf>,
    pub hier_a: f64,
    pub hier_b: f64,
    pub hier_c: f64,
    /// 1-based index of the `θ` coordinate being estimated.
    pub theta_index: usize,
    pub pilot_sweeps: usize,
    pub truth_draws: u64,

    pub gd_min_n: u64,
    pub gd_frac_a: f64,
    pub gd_frac_b: f64,
    pub gd_checkpoint: u64,
}

impl StudyConfig {
    /// Defaults for `example`, following the settings of each example study.
    pub fn defaults(example: Example) -> Self {
        let width = |m| MethodSpec::Width(m);
        let methods = vec![
            width(Method::ConsistentBatchMeans { theta: 0.5 }),
            width(Method::ConsistentBatchMeans { theta: 1.0 / 3.0 }),
            width(Method::BatchMeans { batches: 30 }),
            width(Method::Regenerative),
        ];
        let (epsilon, n_star, r_star) = match example {
            Example::Pareto => (0.005, 45, 30),
            Example::Hier => (0.02, 2000, 50),
            Example::TwoState => (0.01, 1000, 30),
        };
        Self {
            example,
            methods,
            epsilon,
            delta: 0.05,
            n_star,
            r_star,
            penalty_c: 0.0,
            penalty_k: 1.0,
            reps: 1000,
            base_seed: 1,
            truth: TruthSpec::Auto,
            output_dir: PathBuf::from("results"),
            checkpoint: 100,
            cap: DEFAULT_CAP,
            alpha: 1.0,
            beta: 10.0,
            lambda: 9.0,
            regen_c: 1.5,
            p: 0.1,
            q: 0.2,
            atom: 0,
            data_path: None,
            hier_a: 1.0,
            hier_b: 2.0,
            hier_c: 2.0,
            theta_index: 9,
            pilot_sweeps: 1000,
            truth_draws: 1_000_000,
            gd_min_n: 120,
            gd_frac_a: 0.1,
            gd_frac_b: 0.5,
            gd_checkpoint: 1,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = cfg.data_path.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let TruthSpec::File(p) = &mut cfg.truth {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { line: i + 1, msg: format!("expected `key = value`, got `{line}`") });
            };
            pairs.push((i + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let example_line = pairs
            .iter()
            .find(|(_, k, _)| k == "example")
            .ok_or(Error::Config { line: 0, msg: "missing required key `example`".into() })?;
        let example = example_line
            .2
            .parse()
            .map_err(|msg| Error::Config { line: example_line.0, msg })?;
        let mut cfg = Self::defaults(example);
        let mut seen = std::collections::HashSet::new();
        for (line, key, value) in &pairs {
            if !seen.insert(key.clone()) {
                return Err(Error::Config { line: *line, msg: format!("duplicate key `{key}`") });
            }
            cfg.set(key, value).map_err(|msg| Error::Config { line: *line, msg })?;
        }
        cfg.validate().map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        fn real(key: &str, v: &str) -> std::result::Result<f64, String> {
            parse_fraction(v).map_err(|e| format!("`{key}`: {e}"))
        }
        fn count(key: &str, v: &str) -> std::result::Result<u64, String> {
            // allow 1e6 style
            match v.parse::<u64>() {
                Ok(n) => Ok(n),
                Err(_) => {
                    let x: f64 = num(key, v)?;
                    if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 {
                        Ok(x as u64)
                    } else {
                        Err(format!("`{key}`: `{v}` is not a whole number"))
                    }
                }
            }
        }
        match key {
            "example" => {}
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()?;
            }
            "epsilon" => self.epsilon = real(key, value)?,
            "delta" => self.delta = real(key, value)?,
            "n_star" => self.n_star = count(key, value)?,
            "r_star" => self.r_star = count(key, value)?,
            "penalty_c" => self.penalty_c = real(key, value)?,
            "penalty_k" => self.penalty_k = real(key, value)?,
            "reps" => self.reps = count(key, value)?,
            "base_seed" => self.base_seed = count(key, value)?,
            "truth" => {
                self.truth = match value {
                    "auto" | "analytic" | "iid" => TruthSpec::Auto,
                    v => TruthSpec::Value(real(key, v)?),
                }
            }
            "truth_file" => self.truth = TruthSpec::File(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "checkpoint" => self.checkpoint = count(key, value)?,
            "cap" => self.cap = count(key, value)?,
            "alpha" => self.alpha = real(key, value)?,
            "beta" => self.beta = real(key, value)?,
            "lambda" => self.lambda = real(key, value)?,
            "regen_c" => self.regen_c = real(key, value)?,
            "p" => self.p = real(key, value)?,
            "q" => self.q = real(key, value)?,
            "atom" => self.atom = num(key, value)?,
            "data_path" => self.data_path = Some(PathBuf::from(value)),
            "hier_a" => self.hier_a = real(key, value)?,
            "hier_b" => self.hier_b = real(key, value)?,
            "hier_c" => self.hier_c = real(key, value)?,
            "theta_index" => self.theta_index = num(key, value)?,
            "pilot_sweeps" => self.pilot_sweeps = count(key, value)? as usize,
            "truth_draws" => self.truth_draws = count(key, value)?,
            "gd_min_n" => self.gd_min_n = count(key, value)?,
            "gd_frac_a" => self.gd_frac_a = real(key, value)?,
            "gd_frac_b" => self.gd_frac_b = real(key, value)?,
            "gd_checkpoint" => self.gd_checkpoint = count(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods must not be empty"));
        }
        crate::chain::StoppingConfig::new(self.epsilon, self.delta, self.n_star.max(1))?
            .with_tail_penalty(self.penalty_c, self.penalty_k)?;
        if self.n_star < 1 || self.r_star < 1 {
            return Err(Error::invalid("n_star and r_star must be at least 1"));
        }
        if self.checkpoint < 1 || self.gd_checkpoint < 1 {
            return Err(Error::invalid("checkpoint intervals must be positive"));
        }
        if self.cap < self.n_star {
            return Err(Error::invalid("cap must be at least n_star"));
        }
        if self.theta_index < 1 {
            return Err(Error::invalid("theta_index is 1-based"));
        }
        if self.atom > 1 {
            return Err(Error::invalid("atom must be 0 or 1"));
        }
        Ok(())
    }

    /// Stopping parameters for `method` (tours count against `r_star`).
    pub fn stopping_config(&self, method: &Method) -> Result<crate::chain::StoppingConfig> {
        let n_star = match method {
            Method::Regenerative => self.r_star,
            _ => self.n_star,
        };
        crate::chain::StoppingConfig::new(self.epsilon, self.delta, n_star)?
            .with_tail_penalty(self.penalty_c, self.penalty_k)
    }

    /// The resolved configuration as `key=value` pairs, in a fixed order.
    pub fn manifest_pairs(&self) -> Vec<(&'static str, String)> {
        let methods = self.methods.iter().map(MethodSpec::label).collect::<Vec<_>>().join(",");
        let truth = match &self.truth {
            TruthSpec::Auto => "auto".to_string(),
            TruthSpec::Value(v) => v.to_string(),
            TruthSpec::File(p) => format!("file:{}", p.display()),
        };
        let data = self.data_path.as_ref().map_or("bundled".to_string(), |p| p.display().to_string());
        vec![
            ("example", self.example.to_string()),
            ("methods", methods),
            ("epsilon", self.epsilon.to_string()),
            ("delta", self.delta.to_string()),
            ("n_star", self.n_star.to_string()),
            ("r_star", self.r_star.to_string()),
            ("penalty_c", self.penalty_c.to_string()),
            ("penalty_k", self.penalty_k.to_string()),
            ("reps", self.reps.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("truth", truth),
            ("checkpoint", self.checkpoint.to_string()),
            ("cap", self.cap.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("lambda", self.lambda.to_string()),
            ("regen_c", self.regen_c.to_string()),
            ("p", self.p.to_string()),
            ("q", self.q.to_string()),
            ("atom", self.atom.to_string()),
            ("data_path", data),
            ("hier_a", self.hier_a.to_string()),
            ("hier_b", self.hier_b.to_string()),
            ("hier_c", self.hier_c.to_string()),
            ("theta_index", self.theta_index.to_string()),
            ("pilot_sweeps", self.pilot_sweeps.to_string()),
            ("truth_draws", self.truth_draws.to_string()),
            ("gd_min_n", self.gd_min_n.to_string()),
            ("gd_frac_a", self.gd_frac_a.to_string()),
            ("gd_frac_b", self.gd_frac_b.to_string()),
            ("gd_checkpoint", self.gd_checkpoint.to_string()),
        ]
    }
}
