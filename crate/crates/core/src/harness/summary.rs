//! Per-method aggregation and the on-disk result layout:
//! `manifest.txt`, `rows.csv` and `summary.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::study::{ReplicationRow, StudyOutput};
use crate::error::{Error, Result};

pub const ROWS_HEADER: &str = "rep,method,n_final,r_final,estimate,half_width,covered,seed";
pub const SUMMARY_HEADER: &str =
    "method,reps,failed,capped,mean_half_width,se_half_width,mean_n,se_n,mean_r,se_r,coverage,se_coverage,mse,se_mse";

/// A mean with its Monte Carlo standard error. Either may be undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: Option<f64>,
    pub se: Option<f64>,
}

impl Stat {
    /// Mean and sample-std/√m.
    pub fn of(xs: &[f64]) -> Self {
        let m = xs.len();
        if m == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / m as f64;
        let se = (m > 1).then(|| {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (m - 1) as f64 / m as f64).sqrt()
        });
        Self { mean: Some(mean), se }
    }

    /// Proportion with binomial SE `√(p̂(1−p̂)/m)`.
    pub fn proportion(hits: &[bool]) -> Self {
        let m = hits.len();
        if m == 0 {
            return Self::default();
        }
        let p = hits.iter().filter(|&&h| h).count() as f64 / m as f64;
        Self { mean: Some(p), se: (m > 1).then(|| (p * (1.0 - p) / m as f64).sqrt()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    /// Replications that produced an estimate.
    pub reps: u64,
    pub failed: u64,
    /// Replications that hit the iteration cap before stopping.
    pub capped: u64,
    pub half_width: Stat,
    pub run_length: Stat,
    pub tours: Stat,
    pub coverage: Stat,
    pub mse: Stat,
}

/// Aggregate rows per method, in order of first appearance.
pub fn summarize_rows(rows: &[ReplicationRow], truth: f64, cap: u64) -> Vec<MethodSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ReplicationRow>> = BTreeMap::new();
    for row in rows {
        let group = groups.entry(row.method.as_str()).or_default();
        if group.is_empty() {
            order.push(row.method.as_str());
        }
        group.push(row);
    }
    order
        .into_iter()
        .map(|method| {
            let group = &groups[method];
            let ok: Vec<&ReplicationRow> = group.iter().copied().filter(|r| !r.failed()).collect();
            let collect = |f: &dyn Fn(&ReplicationRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
            let covered: Vec<bool> = ok.iter().filter_map(|r| r.covered).collect();
            MethodSummary {
                method: method.to_string(),
                reps: ok.len() as u64,
                failed: (group.len() - ok.len()) as u64,
                capped: ok.iter().filter(|r| r.n_final.is_some_and(|n| n >= cap)).count() as u64,
                half_width: Stat::of(&collect(&|r| r.half_width)),
                run_length: Stat::of(&collect(&|r| r.n_final.map(|n| n as f64))),
                tours: Stat::of(&collect(&|r| r.r_final.map(|n| n as f64))),
                coverage: Stat::proportion(&covered),
                mse: Stat::of(&collect(&|r| r.estimate.map(|e| (e - truth) * (e - truth)))),
            }
        })
        .collect()
}

fn na<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn format_row(row: &ReplicationRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        row.rep,
        row.method,
        na(row.n_final),
        na(row.r_final),
        na(row.estimate),
        na(row.half_width),
        na(row.covered.map(u8::from)),
        row.seed
    )
}

pub fn rows_csv(rows: &[ReplicationRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(ROWS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

pub fn summary_csv(summary: &[MethodSummary]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for s in summary {
        let stats = [s.half_width, s.run_length, s.tours, s.coverage, s.mse]
            .iter()
            .map(|st| format!("{},{}", na(st.mean), na(st.se)))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(out, "{},{},{},{},{}", s.method, s.reps, s.failed, s.capped, stats);
    }
    out
}

fn cell(stat: &Stat, digits: usize) -> String {
    match (stat.mean, stat.se) {
        (None, _) => "NA".into(),
        (Some(m), Some(se)) => format!("{m:.digits$} ({se:.digits$})"),
        (Some(m), None) => format!("{m:.digits$} (NA)"),
    }
}

fn sci(stat: &Stat) -> String {
    match (stat.mean, stat.se) {
        (None, _) => "NA".into(),
        (Some(m), Some(se)) => format!("{m:.3e} ({se:.1e})"),
        (Some(m), None) => format!("{m:.3e} (NA)"),
    }
}

/// Human-readable table: mean (SE) per column.
pub fn format_table(summary: &[MethodSummary]) -> String {
    let header = ["method", "reps", "failed", "capped", "half-width", "chain length", "tours", "coverage", "MSE"];
    let body: Vec<[String; 9]> = summary
        .iter()
        .map(|s| {
            [
                s.method.clone(),
                s.reps.to_string(),
                s.failed.to_string(),
                s.capped.to_string(),
                cell(&s.half_width, 5),
                cell(&s.run_length, 1),
                cell(&s.tours, 1),
                cell(&s.coverage, 3),
                sci(&s.mse),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn manifest_text(out: &StudyOutput) -> String {
    let mut text = format!("version={}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in out.config.manifest_pairs() {
        let _ = writeln!(text, "{k}={v}");
    }
    let _ = writeln!(text, "truth_value={}", out.truth);
    let _ = writeln!(text, "truth_se={}", na(out.truth_se));
    let _ = writeln!(text, "clamp_violations={}", out.clamp_violations);
    text
}

/// Write `manifest.txt`, `rows.csv` and `summary.csv` into `dir`.
pub fn write_results(out: &StudyOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.txt"), manifest_text(out))?;
    fs::write(dir.join("rows.csv"), rows_csv(&out.rows))?;
    fs::write(dir.join("summary.csv"), summary_csv(&out.summary))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            msg: format!("line {}: expected key=value", i + 1),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_opt<T: std::str::FromStr>(field: &str) -> std::result::Result<Option<T>, String> {
    if field == "NA" {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| format!("bad field `{field}`"))
}

pub fn parse_rows(text: &str, path: &Path) -> Result<Vec<ReplicationRow>> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), msg: format!("line {line}: {msg}") };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == ROWS_HEADER => {}
        _ => return Err(err(1, format!("expected header `{ROWS_HEADER}`"))),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(err(i + 1, format!("expected 8 fields, got {}", f.len())));
            }
            let parse = || -> std::result::Result<ReplicationRow, String> {
                Ok(ReplicationRow {
                    rep: f[0].parse().map_err(|_| format!("bad rep `{}`", f[0]))?,
                    method: f[1].to_string(),
                    n_final: parse_opt(f[2])?,
                    r_final: parse_opt(f[3])?,
                    estimate: parse_opt(f[4])?,
                    half_width: parse_opt(f[5])?,
                    covered: parse_opt::<u8>(f[6])?.map(|c| c == 1),
                    seed: f[7].parse().map_err(|_| format!("bad seed `{}`", f[7]))?,
                })
            };
            parse().map_err(|m| err(i + 1, m))
        })
        .collect()
}

/// Re-aggregate a results directory written by [`write_results`].
pub fn summarize(dir: &Path) -> Result<Vec<MethodSummary>> {
    let rows_path = dir.join("rows.csv");
    let manifest_path = dir.join("manifest.txt");
    if !rows_path.is_file() || !manifest_path.is_file() {
        return Err(Error::NoResults(dir.to_path_buf()));
    }
    let manifest = read_manifest(&manifest_path)?;
    let get = |key: &str| -> Result<&String> {
        manifest
            .get(key)
            .ok_or_else(|| Error::Parse { path: manifest_path.clone(), msg: format!("missing `{key}`") })
    };
    let truth: f64 = get("truth_value")?
        .parse()
        .map_err(|_| Error::Parse { path: manifest_path.clone(), msg: "bad truth_value".into() })?;
    let cap: u64 = get("cap")?
        .parse()
        .map_err(|_| Error::Parse { path: manifest_path.clone(), msg: "bad cap".into() })?;
    let rows = parse_rows(&fs::read_to_string(&rows_path)?, &rows_path)?;
    if rows.is_empty() {
        return Err(Error::NoResults(dir.to_path_buf()));
    }
    Ok(summarize_rows(&rows, truth, cap))
}
