//! Report envelope, tolerance resolution and output writers.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One residual compared against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            // NaN fails.
            passed: value <= threshold,
        }
    }
}

/// Defaults merged with user overrides. Overrides naming no known threshold
/// are a configuration error.
pub fn resolve_tolerances(
    defaults: &[(&str, f64)],
    overrides: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !v.is_finite() || *v < 0.0 {
            return Err(CliError::Config(format!("tolerance {k:?} must be a non-negative number")));
        }
        match out.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(CliError::Config(format!(
                    "unknown tolerance {k:?}; known: {}",
                    known.join(", ")
                )));
            }
        }
    }
    Ok(out)
}

/// Worst value per check name, first-seen order.
pub fn worst_per_name(rows: impl IntoIterator<Item = (String, f64)>, tols: &BTreeMap<String, f64>) -> Vec<Check> {
    let mut worst: Vec<(String, f64)> = Vec::new();
    for (name, v) in rows {
        match worst.iter_mut().find(|(n, _)| *n == name) {
            Some((_, w)) => {
                if v.is_nan() || v > *w {
                    *w = v;
                }
            }
            None => worst.push((name, v)),
        }
    }
    worst
        .into_iter()
        .map(|(name, v)| {
            let thr = tols.get(&name).copied().unwrap_or(0.0);
            Check::new(name, v, thr)
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: &'static str,
    pub timestamp: u64,
    pub seed: u64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Effective thresholds after overrides.
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, seed: u64, tolerances: BTreeMap<String, f64>, checks: Vec<Check>, body: T) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Report {
            command,
            timestamp: now(),
            seed,
            passed,
            error: None,
            tolerances,
            checks,
            body,
        }
    }

    pub fn failed(mut self, error: String) -> Self {
        self.passed = false;
        self.error = Some(error);
        self
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes the report, JSON in full or the check table as CSV.
pub fn emit<T: Serialize>(report: &Report<T>, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for c in &report.checks {
                w.serialize(c).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))?
        }
    };
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}
