//! `twirl`: the group-average projection onto the commutant of an algebra,
//! applied to given operators, plus an optional spectral pinching.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use steerlab_core::random::{case_rng, random_operator};
use steerlab_core::suite::twirl_residuals;
use steerlab_core::twirl::{spectral_projections, twirl_projection, WeylGroup};
use steerlab_core::{tol, AlgebraSpec, Operator};

use crate::config::{self, impl_shared};
use crate::report::{self, worst_per_name, Check, Format, Report};
use crate::{CliError, Common, Verdict};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwirlConfig {
    pub algebra: AlgebraSpec,
    /// Operators to project; their images appear in the report.
    #[serde(default)]
    pub operators: Vec<Operator>,
    /// Rounds of randomized invariant checks.
    #[serde(default = "default_rounds")]
    pub random_rounds: usize,
    #[serde(default)]
    pub pinching: Option<PinchingConfig>,
    /// Include the Kraus operators of the projection in the report.
    #[serde(default)]
    pub include_kraus: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}
impl_shared!(TwirlConfig);

fn default_rounds() -> usize {
    4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinchingConfig {
    /// Hermitian operator whose spectral projections define the pinching.
    pub operator: Operator,
    #[serde(default = "default_gap")]
    pub gap_tol: f64,
}

fn default_gap() -> f64 {
    1e-9
}

const DEFAULTS: &[(&str, f64)] = &[
    ("idempotence", 1e-10),
    ("range-in-commutant", 1e-10),
    ("fixes-commutant", 1e-12),
    ("center", 1e-10),
    ("bimodule", 1e-9),
    ("choi-positivity", tol::POS),
    ("pinching-resolution", 1e-12),
    ("pinching-idempotence", 1e-10),
    ("pinching-commutes", 1e-9),
];

#[derive(Debug, Serialize)]
struct Image {
    input: Operator,
    output: Operator,
}

#[derive(Debug, Serialize)]
struct Pinched {
    gap_tol: f64,
    eigenvalues: Vec<f64>,
    projections: Vec<Operator>,
}

#[derive(Debug, Serialize)]
struct Body {
    algebra: AlgebraSpec,
    commutant: AlgebraSpec,
    group_order: usize,
    kraus_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<Operator>>,
    images: Vec<Image>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pinching: Option<Pinched>,
}

pub fn run(args: &Common) -> Result<Verdict, CliError> {
    let cfg: TwirlConfig = config::load(&args.config)?;
    let eff = config::effective(&cfg, args.seed, args.out.as_ref(), args.format);
    let tols = report::resolve_tolerances(DEFAULTS, &cfg.tolerances)?;
    let spec = &cfg.algebra;
    let d = spec.total_dim();
    let cfg_err = |e: steerlab_core::Error| CliError::Config(e.to_string());

    let phi = twirl_projection(spec);
    let comm = spec.commutant();
    let mut rows: Vec<(String, f64)> = Vec::new();
    let mut rng = case_rng(eff.seed, 0);
    for _ in 0..cfg.random_rounds {
        for (n, _, v) in twirl_residuals(spec, &mut rng).map_err(cfg_err)? {
            rows.push((n.to_string(), v));
        }
    }

    let mut images = Vec::new();
    for (k, b) in cfg.operators.iter().enumerate() {
        if b.dim() != d {
            return Err(CliError::Config(format!("operator {k} has dimension {}, algebra has {d}", b.dim())));
        }
        let scale = b.norm().max(f64::MIN_POSITIVE);
        let pb = phi.apply(b);
        rows.push(("idempotence".into(), (phi.apply(&pb) - &pb).norm() / scale));
        rows.push(("range-in-commutant".into(), comm.membership_residual(&pb).map_err(cfg_err)? / scale));
        images.push(Image {
            input: b.clone(),
            output: pb,
        });
    }

    let pinching = match &cfg.pinching {
        None => None,
        Some(p) => {
            let t = &p.operator;
            if t.dim() != d {
                return Err(CliError::Config(format!("pinching operator has dimension {}, algebra has {d}", t.dim())));
            }
            let proj = spectral_projections(t, p.gap_tol).map_err(cfg_err)?;
            let mut sum = Operator::zeros(d);
            let mut commutes: f64 = 0.0;
            for (_, q) in &proj {
                sum += q;
                commutes = commutes.max((q * t - t * q).norm());
            }
            let b = random_operator(&mut rng, d);
            let pinch = |x: &Operator| {
                let mut out = Operator::zeros(d);
                for (_, q) in &proj {
                    out += &(&(q * x) * q);
                }
                out
            };
            let pb = pinch(&b);
            rows.push(("pinching-resolution".into(), (sum - Operator::identity(d)).norm()));
            rows.push(("pinching-idempotence".into(), (pinch(&pb) - &pb).norm() / b.norm()));
            rows.push(("pinching-commutes".into(), commutes / t.norm().max(1.0)));
            Some(Pinched {
                gap_tol: p.gap_tol,
                eigenvalues: proj.iter().map(|(l, _)| *l).collect(),
                projections: proj.into_iter().map(|(_, q)| q).collect(),
            })
        }
    };

    let checks: Vec<Check> = worst_per_name(rows, &tols);
    let body = Body {
        algebra: spec.clone(),
        commutant: comm,
        group_order: WeylGroup::new(spec).order(),
        kraus_count: phi.kraus_count(),
        kraus: cfg.include_kraus.then(|| phi.kraus_ops()),
        images,
        pinching,
    };
    let report = Report::new("twirl", eff.seed, tols, checks, body);
    report::emit(&report, eff.format, eff.out.as_deref())?;
    Ok(if report.passed { Verdict::Pass } else { Verdict::Violation })
}
