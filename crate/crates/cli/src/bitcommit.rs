//! `bitcommit`: Monte Carlo runs of the commitment protocol.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use steerlab_core::bitcommit::{self as bc, Mode, ProtocolConfig, SimulationReport};

use crate::config::{self, impl_shared};
use crate::report::{self, Check, Format, Report};
use crate::{CliError, Common, Verdict};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitcommitConfig {
    pub sites: usize,
    pub trials: usize,
    pub mode: Mode,
    #[serde(default)]
    pub committed_bit: u8,
    pub unveiled_bit: u8,
    #[serde(default)]
    pub record_trials: bool,
    /// Also compute Bob's marginals as full `2^N` densities.
    #[serde(default)]
    pub dense: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}
impl_shared!(BitcommitConfig);

const DEFAULTS: &[(&str, f64)] = &[
    ("concealment", 1e-12),
    ("dense-concealment", 1e-12),
    ("cheat-marginal", 1e-12),
    // In standard errors of the binomial rate.
    ("acceptance-sigmas", 3.0),
    ("cantor-separation", 0.0),
];

#[derive(Debug, Serialize)]
struct Body {
    #[serde(flatten)]
    simulation: SimulationReport,
    analytic_acceptance: f64,
    min_cantor_separation: f64,
}

pub fn run(args: &Common) -> Result<Verdict, CliError> {
    let cfg: BitcommitConfig = config::load(&args.config)?;
    let eff = config::effective(&cfg, args.seed, args.out.as_ref(), args.format);
    let tols = report::resolve_tolerances(DEFAULTS, &cfg.tolerances)?;
    let protocol = ProtocolConfig {
        sites: cfg.sites,
        trials: cfg.trials,
        seed: eff.seed,
        mode: cfg.mode,
        committed_bit: cfg.committed_bit,
        unveiled_bit: cfg.unveiled_bit,
        record_trials: cfg.record_trials,
        dense: cfg.dense,
    };
    protocol.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let sim = bc::simulate(&protocol).map_err(|e| CliError::Config(e.to_string()))?;

    let mut checks = vec![Check::new("concealment", sim.trace_distance_rho0_rho1, tols["concealment"])];
    if let Some(d) = sim.dense_trace_distance {
        checks.push(Check::new("dense-concealment", d, tols["dense-concealment"]));
    }
    if let Some(d) = sim.cheat_marginal_distance {
        checks.push(Check::new("cheat-marginal", d, tols["cheat-marginal"]));
    }
    checks.push(Check::new(
        "acceptance",
        (sim.acceptance_rate - sim.expected_acceptance).abs(),
        tols["acceptance-sigmas"] * sim.standard_error,
    ));
    let sep = bc::min_cantor_separation(cfg.sites);
    checks.push(Check::new(
        "cantor-separation",
        (sim.cantor_gap - sep).max(0.0),
        tols["cantor-separation"],
    ));

    let body = Body {
        analytic_acceptance: bc::analytic_acceptance(&protocol),
        min_cantor_separation: sep,
        simulation: sim,
    };
    let report = Report::new("bitcommit", eff.seed, tols, checks, body);
    report::emit(&report, eff.format, eff.out.as_deref())?;
    Ok(if report.passed { Verdict::Pass } else { Verdict::Violation })
}
