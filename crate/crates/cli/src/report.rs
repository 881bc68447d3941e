//! Experiment reports: per-trial records, aggregates and serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const REPORT_VERSION: &str = concat!("randla-report/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub success: bool,
    pub iterations: Option<usize>,
    pub bound: Option<f64>,
    pub measured: BTreeMap<String, f64>,
    /// Error or panic message for a failed trial.
    pub error: Option<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: BTreeMap<String, f64>,
    pub version: String,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let h = s.len() / 2;
    if s.len() % 2 == 1 {
        s[h]
    } else {
        0.5 * (s[h - 1] + s[h])
    }
}

/// Sample standard deviation (0 for a single value).
fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mu = mean(x);
    (x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn summarize(out: &mut BTreeMap<String, f64>, key: &str, values: &[f64]) {
    if values.is_empty() {
        return;
    }
    let mu = mean(values);
    let sd = std_dev(values);
    let half = 3.0 * sd / (values.len() as f64).sqrt();
    out.insert(format!("mean_{key}"), mu);
    out.insert(format!("median_{key}"), median(values));
    out.insert(format!("std_{key}"), sd);
    out.insert(format!("band_lo_{key}"), mu - half);
    out.insert(format!("band_hi_{key}"), mu + half);
}

/// Aggregates over the trial records. Each measured quantity gets its mean,
/// median, standard deviation and the 3σ band of the mean; counts and the
/// success rate are included too.
pub fn compute_aggregates(trials: &[TrialRecord]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    out.insert("trials".to_string(), trials.len() as f64);
    if trials.is_empty() {
        return out;
    }
    let successes = trials.iter().filter(|t| t.success).count();
    out.insert("success_rate".to_string(), successes as f64 / trials.len() as f64);
    out.insert("errors".to_string(), trials.iter().filter(|t| t.error.is_some()).count() as f64);
    let keys: BTreeSet<&String> = trials.iter().flat_map(|t| t.measured.keys()).collect();
    for key in keys {
        let values: Vec<f64> = trials.iter().filter_map(|t| t.measured.get(key).copied()).collect();
        summarize(&mut out, key, &values);
    }
    let bounds: Vec<f64> = trials.iter().filter_map(|t| t.bound).collect();
    summarize(&mut out, "bound", &bounds);
    let iters: Vec<f64> = trials.iter().filter_map(|t| t.iterations.map(|i| i as f64)).collect();
    summarize(&mut out, "iterations", &iters);
    out
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, trials: Vec<TrialRecord>) -> Self {
        let aggregates = compute_aggregates(&trials);
        Self { config, trials, aggregates, version: REPORT_VERSION.to_string() }
    }

    /// Recomputes the aggregates from the trial records and compares them
    /// with the stored values.
    pub fn verify(&self) -> Result<()> {
        for (i, t) in self.trials.iter().enumerate() {
            ensure!(t.trial == i, "trial records out of order: position {i} holds trial {}", t.trial);
        }
        let fresh = compute_aggregates(&self.trials);
        let stored: BTreeSet<&String> = self.aggregates.keys().collect();
        let expected: BTreeSet<&String> = fresh.keys().collect();
        ensure!(stored == expected, "aggregate keys differ from those implied by the trial records");
        for (k, &v) in &fresh {
            let s = self.aggregates[k];
            let tol = 1e-12 * v.abs().max(1.0);
            ensure!((s - v).abs() <= tol, "aggregate {k} = {s} but the trial records give {v}");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).context("parsing report JSON")?;
        report.verify().context("report failed its self-consistency check")?;
        Ok(report)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per trial. Fixed columns come first, then measured
    /// quantities in sorted key order.
    pub fn to_csv(&self) -> Result<String> {
        let keys: BTreeSet<&String> = self.trials.iter().flat_map(|t| t.measured.keys()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["trial", "seed", "stream_id", "success", "iterations", "bound", "error", "wall_ms"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for t in &self.trials {
            let mut row = vec![
                t.trial.to_string(),
                t.seed.to_string(),
                t.stream_id.to_string(),
                t.success.to_string(),
                opt(t.iterations.map(|i| i.to_string())),
                opt(t.bound.map(|b| b.to_string())),
                opt(t.error.clone()),
                t.wall_ms.to_string(),
            ];
            row.extend(keys.iter().map(|k| opt(t.measured.get(*k).map(|v| v.to_string()))));
            w.write_record(&row)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Copy with every timing field zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.trials.iter_mut().for_each(|t| t.wall_ms = 0.0);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ReportFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => bail!("unknown report format '{other}' (expected json or csv)"),
        }
    }
}

/// Writes `<dir>/<experiment>.<ext>`, creating `dir` if needed.
pub fn emit_report(report: &ExperimentReport, dir: &Path, format: ReportFormat) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = if report.config.experiment.is_empty() { "report" } else { &report.config.experiment };
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, x: f64, success: bool) -> TrialRecord {
        TrialRecord {
            trial,
            seed: 1,
            stream_id: trial as u64,
            success,
            iterations: Some(trial + 1),
            bound: Some(2.0),
            measured: BTreeMap::from([("err".to_string(), x)]),
            error: None,
            wall_ms: 0.5,
        }
    }

    #[test]
    fn aggregates_by_hand() {
        let r = ExperimentReport::new(ExperimentConfig::default(), vec![record(0, 1.0, true), record(1, 3.0, false), record(2, 8.0, true)]);
        let a = &r.aggregates;
        assert_eq!(a["mean_err"], 4.0);
        assert_eq!(a["median_err"], 3.0);
        assert!((a["std_err"] - 13f64.sqrt()).abs() < 1e-12);
        assert!((a["success_rate"] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a["median_iterations"], 2.0);
        r.verify().unwrap();
    }

    #[test]
    fn tampered_aggregate_detected() {
        let mut r = ExperimentReport::new(ExperimentConfig::default(), vec![record(0, 1.0, true)]);
        r.aggregates.insert("mean_err".into(), 1.5);
        assert!(r.verify().is_err());
        let text = r.to_json().unwrap();
        assert!(ExperimentReport::from_json(&text).is_err());
    }

    #[test]
    fn format_tags() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
