//! `steer`: steering POVM and preparation instrument for a given state and
//! ensemble, with every residual checked.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use steerlab_core::linalg::pauli;
use steerlab_core::random::{case_rng, split_state};
use steerlab_core::state::purify;
use steerlab_core::steering::{build_steering_povm_with, SteeringTolerances};
use steerlab_core::suite::{instrument_residuals, steering_residuals, SteeringCase};
use steerlab_core::{instrument, tol};
use steerlab_core::{AlgebraSpec, Component, Ensemble, Error, Instrument, Operator, Povm, SubState, VectorState};

use crate::config::{self, impl_shared};
use crate::report::{self, Check, Format, Report};
use crate::{CliError, Common, Verdict};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerConfig {
    /// Bob's algebra in vector mode; the algebra of `density` otherwise.
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub vector: Option<VectorState>,
    /// Full-space density, purified before steering.
    #[serde(default)]
    pub density: Option<Operator>,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}
impl_shared!(SteerConfig);

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleConfig {
    Components(Vec<ComponentConfig>),
    BlochCircle(BlochCircle),
    RandomSplit(RandomSplit),
}

/// Exactly one of `density` (full space) or `blocks` (one operator per block).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub weight: f64,
    #[serde(default)]
    pub density: Option<Operator>,
    #[serde(default)]
    pub blocks: Option<Vec<Operator>>,
}

/// `points` equally weighted qubit states `½(I + r(cos θ σ_a + sin θ σ_b))`
/// on a one-block algebra with `n = 2`; their barycenter is `I/2`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochCircle {
    pub points: usize,
    #[serde(default = "unit")]
    pub radius: f64,
    #[serde(default)]
    pub plane: Plane,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    #[default]
    Xz,
    Xy,
    Yz,
}

/// A seeded random split of the state induced on the algebra.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSplit {
    pub components: usize,
}

const DEFAULTS: &[(&str, f64)] = &[
    ("solver.residual", tol::RES),
    ("solver.barycenter", tol::BARY),
    ("povm.positivity", tol::POS),
    ("povm.commutant-membership", 1e-10),
    ("povm.completeness", 1e-9),
    ("povm.preparation", 1e-9),
    ("povm.posterior-state", 1e-8),
    ("povm.probability", 1e-9),
    ("instrument.compatibility", 1e-10),
    ("instrument.locality", 1e-10),
    ("instrument.preparation", 1e-9),
    ("instrument.duality", 1e-10),
    ("instrument.commutation", 1e-10),
    ("instrument.sub-unital", tol::POS),
    ("instrument.probability-sum", 1e-10),
    ("instrument.nonselective", 1e-9),
];

#[derive(Debug, Serialize)]
struct ComponentOut {
    label: String,
    weight: f64,
    blocks: Vec<Operator>,
}

#[derive(Debug, Serialize)]
struct SteerBody {
    mode: &'static str,
    algebra: AlgebraSpec,
    commutant: AlgebraSpec,
    vector: VectorState,
    ensemble: Vec<ComponentOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    povm: Option<Povm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    instrument: Option<Instrument>,
}

fn cfg_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn run(args: &Common) -> Result<Verdict, CliError> {
    let cfg: SteerConfig = config::load(&args.config)?;
    let eff = config::effective(&cfg, args.seed, args.out.as_ref(), args.format);
    let tols = report::resolve_tolerances(DEFAULTS, &cfg.tolerances)?;
    let (report, verdict) = execute(&cfg, eff.seed, tols)?;
    report::emit(&report, eff.format, eff.out.as_deref())?;
    Ok(verdict)
}

/// The vector, Bob's algebra, the ensemble on it, and which mode produced them.
struct Problem {
    mode: &'static str,
    spec: AlgebraSpec,
    x: VectorState,
    mu: Ensemble,
}

fn problem(cfg: &SteerConfig, seed: u64) -> Result<Problem, CliError> {
    let source = &cfg.algebra;
    match (&cfg.vector, &cfg.density) {
        (Some(v), None) => {
            let x = VectorState::new(v.amplitudes().to_vec()).map_err(cfg_err)?;
            let rho = x.restrict(source).map_err(cfg_err)?;
            let mu = ensemble(&cfg.ensemble, source, &rho, seed)?;
            Ok(Problem {
                mode: "vector",
                spec: source.clone(),
                x,
                mu,
            })
        }
        (None, Some(d)) => {
            let rho = SubState::from_density(source, d).map_err(cfg_err)?;
            let p = purify(&rho).map_err(cfg_err)?;
            let mu = ensemble(&cfg.ensemble, source, &rho, seed)?;
            // The purified algebra has the same blocks with new multiplicities.
            let moved = mu
                .components()
                .iter()
                .map(|c| {
                    Ok(Component {
                        label: c.label.clone(),
                        weight: c.weight,
                        state: SubState::from_blocks(&p.algebra, &c.state.blocks())?,
                    })
                })
                .collect::<steerlab_core::Result<Vec<_>>>()
                .map_err(cfg_err)?;
            let mu = Ensemble::new(&p.algebra, moved).map_err(cfg_err)?;
            Ok(Problem {
                mode: "density",
                spec: p.algebra,
                x: p.vector,
                mu,
            })
        }
        _ => Err(CliError::Config("give exactly one of \"vector\" or \"density\"".into())),
    }
}

fn ensemble(cfg: &EnsembleConfig, spec: &AlgebraSpec, rho: &SubState, seed: u64) -> Result<Ensemble, CliError> {
    match cfg {
        EnsembleConfig::Components(items) => {
            let comps = items
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let state = match (&c.density, &c.blocks) {
                        (Some(d), None) => SubState::from_density(spec, d).map_err(cfg_err)?,
                        (None, Some(b)) => SubState::from_blocks(spec, b).map_err(cfg_err)?,
                        _ => {
                            return Err(CliError::Config(format!(
                                "component {k}: give exactly one of \"density\" or \"blocks\""
                            )))
                        }
                    };
                    Ok(Component {
                        label: c.label.clone().unwrap_or_else(|| k.to_string()),
                        weight: c.weight,
                        state,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ensemble::new(spec, comps).map_err(cfg_err)
        }
        EnsembleConfig::BlochCircle(b) => bloch_circle(b, spec),
        EnsembleConfig::RandomSplit(r) => {
            if r.components == 0 {
                return Err(CliError::Config("random_split needs at least one component".into()));
            }
            split_state(&mut case_rng(seed, 0), rho, r.components).map_err(cfg_err)
        }
    }
}

fn bloch_circle(b: &BlochCircle, spec: &AlgebraSpec) -> Result<Ensemble, CliError> {
    if spec.num_blocks() != 1 || spec.blocks()[0].n != 2 {
        return Err(CliError::Config("bloch_circle needs an algebra with a single 2x2 block".into()));
    }
    if b.points == 0 {
        return Err(CliError::Config("bloch_circle needs at least one point".into()));
    }
    if !(0.0..=1.0).contains(&b.radius) {
        return Err(CliError::Config(format!("bloch_circle radius {} outside [0, 1]", b.radius)));
    }
    let (sa, sb) = match b.plane {
        Plane::Xz => (pauli::x(), pauli::z()),
        Plane::Xy => (pauli::x(), pauli::y()),
        Plane::Yz => (pauli::y(), pauli::z()),
    };
    let w = 1.0 / b.points as f64;
    let comps = (0..b.points)
        .map(|k| {
            let theta = TAU * k as f64 / b.points as f64;
            let bloch = &sa.scale(b.radius * theta.cos()) + &sb.scale(b.radius * theta.sin());
            let sigma = (&Operator::identity(2) + &bloch).scale(0.5);
            Ok(Component {
                label: k.to_string(),
                weight: w,
                state: SubState::from_blocks(spec, &[sigma])?,
            })
        })
        .collect::<steerlab_core::Result<Vec<_>>>()
        .map_err(cfg_err)?;
    Ensemble::new(spec, comps).map_err(cfg_err)
}

fn execute(cfg: &SteerConfig, seed: u64, tols: BTreeMap<String, f64>) -> Result<(Report<SteerBody>, Verdict), CliError> {
    let Problem { mode, spec, x, mu } = problem(cfg, seed)?;
    let mut body = SteerBody {
        mode,
        algebra: spec.clone(),
        commutant: spec.commutant(),
        vector: x.clone(),
        ensemble: mu
            .components()
            .iter()
            .map(|c| ComponentOut {
                label: c.label.clone(),
                weight: c.weight,
                blocks: c.state.blocks(),
            })
            .collect(),
        povm: None,
        instrument: None,
    };
    let solver = SteeringTolerances {
        residual: tols["solver.residual"],
        barycenter: tols["solver.barycenter"],
    };
    let povm = match build_steering_povm_with(&x, &spec, &mu, solver) {
        Ok(p) => p,
        Err(e @ (Error::BarycenterMismatch { residual } | Error::Infeasible { residual })) => {
            let name = match e {
                Error::BarycenterMismatch { .. } => "solver.barycenter",
                _ => "solver.residual",
            };
            eprintln!("steerlab: {e}");
            let checks = vec![Check::new(name, residual, tols[name])];
            let report = Report::new("steer", seed, tols, checks, body).failed(e.to_string());
            return Ok((report, Verdict::Violation));
        }
        Err(e) => return Err(cfg_err(e)),
    };
    let e = instrument::instrument_from_povm(&spec, &povm).map_err(cfg_err)?;
    let case = SteeringCase { spec, x, mu };

    let mut checks = Vec::new();
    let named = |prefix: &str, rows: Vec<(&'static str, f64, f64)>| -> Vec<Check> {
        rows.into_iter()
            .map(|(n, thr, v)| {
                let name = format!("{prefix}.{n}");
                let t = tols.get(&name).copied().unwrap_or(thr);
                Check::new(name, v, t)
            })
            .collect()
    };
    checks.extend(named("povm", steering_residuals(&case, &povm).map_err(cfg_err)?));
    let mut rng = case_rng(seed, 1);
    checks.extend(named(
        "instrument",
        instrument_residuals(&case, &povm, &e, &mut rng).map_err(cfg_err)?,
    ));

    body.povm = Some(povm);
    body.instrument = Some(e);
    let report = Report::new("steer", seed, tols, checks, body);
    let verdict = if report.passed { Verdict::Pass } else { Verdict::Violation };
    Ok((report, verdict))
}
