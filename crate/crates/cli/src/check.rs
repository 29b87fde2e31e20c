//! `check`: randomized invariant suites.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use steerlab_core::suite::{run_suite, InvariantResult, Suite, SuiteOptions};

use crate::config::{self, impl_shared};
use crate::report::{self, Check, Format, Report};
use crate::{CheckArgs, CliError, Verdict};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub suite: Option<Suite>,
    #[serde(default)]
    pub cases: Option<usize>,
    #[serde(default)]
    pub max_dim: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Per-invariant threshold overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}
impl_shared!(CheckConfig);

const DEFAULT_CASES: usize = 100;
const DEFAULT_MAX_DIM: usize = 16;

#[derive(Debug, Serialize)]
struct Body {
    suite: Suite,
    cases: usize,
    max_dim: usize,
    invariants: Vec<InvariantResult>,
    errors: Vec<String>,
}

pub fn run(args: &CheckArgs) -> Result<Verdict, CliError> {
    let cfg: CheckConfig = match &args.config {
        Some(p) => config::load(p)?,
        None => CheckConfig::default(),
    };
    let eff = config::effective(&cfg, args.seed, args.out.as_ref(), args.format);
    let suite = match (&args.suite, cfg.suite) {
        (Some(s), _) => s.parse().map_err(|e: steerlab_core::Error| CliError::Config(e.to_string()))?,
        (None, Some(s)) => s,
        (None, None) => return Err(CliError::Config("no suite given".into())),
    };
    let mut opts = SuiteOptions::new(args.cases.or(cfg.cases).unwrap_or(DEFAULT_CASES), eff.seed);
    opts.max_dim = cfg.max_dim.unwrap_or(DEFAULT_MAX_DIM);
    if opts.max_dim == 0 {
        return Err(CliError::Config("max_dim must be positive".into()));
    }
    opts.overrides = cfg.tolerances.clone();
    let r = run_suite(suite, &opts);

    if let Some(k) = cfg.tolerances.keys().find(|k| r.invariant(k).is_none()) {
        let known: Vec<&str> = r.invariants.iter().map(|i| i.name.as_str()).collect();
        return Err(CliError::Config(format!(
            "unknown tolerance {k:?}; known: {}",
            known.join(", ")
        )));
    }
    let tols: BTreeMap<String, f64> = r.invariants.iter().map(|i| (i.name.clone(), i.threshold)).collect();
    let checks: Vec<Check> = r
        .invariants
        .iter()
        .map(|i| Check {
            name: i.name.clone(),
            value: i.worst,
            threshold: i.threshold,
            passed: i.passed,
        })
        .collect();
    let body = Body {
        suite: r.suite,
        cases: r.cases,
        max_dim: r.max_dim,
        invariants: r.invariants,
        errors: r.errors,
    };
    let report = Report::new("check", eff.seed, tols, checks, body);
    report::emit(&report, eff.format, eff.out.as_deref())?;
    Ok(if report.passed { Verdict::Pass } else { Verdict::Violation })
}
