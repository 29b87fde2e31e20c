//! Randomized invariant suites.
//!
//! Each suite draws `cases` instances from per-case generators seeded by
//! `(seed, case index)`, evaluates a fixed list of invariants and keeps the
//! worst residual of each. Construction errors are counted as failures of the
//! pseudo-invariant `errors`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraSpec;
use crate::bitcommit;
use crate::error::{Error, Result};
use crate::instrument::{self, Instrument};
use crate::linalg::{Operator, C64};
use crate::random::{self, case_rng};
use crate::state::{barycenter, is_separating, purify, trace_distance, Ensemble, SubState, VectorState};
use crate::steering::{self, build_steering_povm, Povm};
use crate::tol;
use crate::twirl::{pinching, twirl_projection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    OperatorCore,
    Twirl,
    Steering,
    InstrumentLocality,
    Bitcommit,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::OperatorCore,
        Suite::Twirl,
        Suite::Steering,
        Suite::InstrumentLocality,
        Suite::Bitcommit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OperatorCore => "operator-core",
            Suite::Twirl => "twirl",
            Suite::Steering => "steering",
            Suite::InstrumentLocality => "instrument-locality",
            Suite::Bitcommit => "bitcommit",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub cases: usize,
    pub seed: u64,
    /// Largest Hilbert-space dimension of random algebras.
    pub max_dim: usize,
    /// Per-invariant threshold overrides, keyed by invariant name.
    pub overrides: BTreeMap<String, f64>,
}

impl SuiteOptions {
    pub fn new(cases: usize, seed: u64) -> Self {
        SuiteOptions {
            cases,
            seed,
            max_dim: 16,
            overrides: BTreeMap::new(),
        }
    }
}

/// Worst observed residual of one invariant against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub threshold: f64,
    pub worst: f64,
    pub checked: usize,
    pub failures: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub invariants: Vec<InvariantResult>,
    /// First few construction errors, for diagnosis.
    pub errors: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn invariant(&self, name: &str) -> Option<&InvariantResult> {
        self.invariants.iter().find(|r| r.name == name)
    }
}

const MAX_ERRORS_KEPT: usize = 5;

/// Collects residuals per invariant, in first-seen order.
struct Tally<'a> {
    overrides: &'a BTreeMap<String, f64>,
    results: Vec<InvariantResult>,
    errors: Vec<String>,
}

impl<'a> Tally<'a> {
    fn new(overrides: &'a BTreeMap<String, f64>) -> Self {
        Tally {
            overrides,
            results: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, threshold: f64, value: f64) {
        let threshold = self.overrides.get(name).copied().unwrap_or(threshold);
        let idx = match self.results.iter().position(|r| r.name == name) {
            Some(i) => i,
            None => {
                self.results.push(InvariantResult {
                    name: name.to_string(),
                    threshold,
                    worst: 0.0,
                    checked: 0,
                    failures: 0,
                    passed: true,
                });
                self.results.len() - 1
            }
        };
        let r = &mut self.results[idx];
        r.checked += 1;
        // NaN counts as a failure and sticks as the worst value.
        if value.is_nan() || value > r.worst || r.worst.is_nan() {
            r.worst = if r.worst.is_nan() { r.worst } else { value };
        }
        if value.is_nan() || value > threshold {
            r.failures += 1;
            r.passed = false;
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.record(name, 0.0, if ok { 0.0 } else { 1.0 });
    }

    fn error(&mut self, case: usize, e: Error) {
        self.record("errors", 0.0, 1.0);
        if self.errors.len() < MAX_ERRORS_KEPT {
            self.errors.push(format!("case {case}: {e}"));
        }
    }

    fn finish(mut self, suite: Suite, opts: &SuiteOptions) -> SuiteReport {
        if !self.results.iter().any(|r| r.name == "errors") {
            self.record("errors", 0.0, 0.0);
            self.results.last_mut().expect("just pushed").checked = 0;
        }
        let passed = self.results.iter().all(|r| r.passed);
        SuiteReport {
            suite,
            cases: opts.cases,
            seed: opts.seed,
            max_dim: opts.max_dim,
            invariants: self.results,
            errors: self.errors,
            passed,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> SuiteReport {
    let mut tally = Tally::new(&opts.overrides);
    for case in 0..opts.cases {
        let outcome = match suite {
            Suite::OperatorCore => operator_core_case(&mut tally, opts, case),
            Suite::Twirl => twirl_case(&mut tally, opts, case),
            Suite::Steering => steering_case(&mut tally, opts, case),
            Suite::InstrumentLocality => instrument_case(&mut tally, opts, case),
            Suite::Bitcommit => bitcommit_case(&mut tally, opts, case),
        };
        if let Err(e) = outcome {
            tally.error(case, e);
        }
    }
    tally.finish(suite, opts)
}

/// A randomized steering problem: Bob's algebra, a vector and an ensemble
/// whose barycenter is the vector state on that algebra.
#[derive(Clone, Debug)]
pub struct SteeringCase {
    pub spec: AlgebraSpec,
    pub x: VectorState,
    pub mu: Ensemble,
}

/// Case `index` of the steering family: edge-case algebras first, then random
/// ones of dimension at most `max_dim`, with 2 to 8 components.
pub fn steering_case_instance(seed: u64, index: usize, max_dim: usize) -> Result<SteeringCase> {
    let mut rng = case_rng(seed, index as u64);
    let spec = random::spec_for_case(&mut rng, index, max_dim);
    let k = rng.random_range(2..=8);
    let (x, mu) = random::steering_instance(&mut rng, &spec, k)?;
    Ok(SteeringCase { spec, x, mu })
}

/// Steering invariants of a POVM built for `case`.
pub fn steering_residuals(case: &SteeringCase, povm: &Povm) -> Result<Vec<(&'static str, f64, f64)>> {
    let SteeringCase { spec, x, mu } = case;
    let mut posterior: f64 = 0.0;
    let mut probability: f64 = 0.0;
    for c in mu.components() {
        let a = povm
            .element(&c.label)
            .ok_or_else(|| Error::LabelMismatch(c.label.clone()))?;
        let (p, y) = steering::posterior_vector(x, a)?;
        probability = probability.max((p - c.weight).abs());
        posterior = posterior.max(steering::functional_residual(
            spec,
            |b| y.expectation(b),
            |b| c.state.eval(b),
        ));
    }
    Ok(vec![
        ("positivity", tol::POS, (-povm.min_eigenvalue()).max(0.0)),
        ("commutant-membership", 1e-10, povm.membership_residual()),
        ("completeness", 1e-9, povm.completeness_residual()),
        ("preparation", 1e-9, steering::verify_preparation(x, spec, mu, povm)?),
        ("posterior-state", 1e-8, posterior),
        ("probability", 1e-9, probability),
    ])
}

fn steering_case(t: &mut Tally, opts: &SuiteOptions, case: usize) -> Result<()> {
    let sc = steering_case_instance(opts.seed, case, opts.max_dim)?;
    let povm = build_steering_povm(&sc.x, &sc.spec, &sc.mu)?;
    for (name, thr, v) in steering_residuals(&sc, &povm)? {
        t.record(name, thr, v);
    }
    // Merging two components must add their elements.
    let labels = ["0", "1"];
    let merged = sc.mu.merge(&labels, "m")?;
    let merged_povm = build_steering_povm(&sc.x, &sc.spec, &merged)?;
    let sum = povm.subset(&labels)?;
    let m = merged_povm
        .element("m")
        .ok_or_else(|| Error::LabelMismatch("m".into()))?;
    t.record("finite-additivity", 10.0 * tol::HERM, (m - &sum).max_abs());
    Ok(())
}

/// Instrument invariants for the preparation instrument of `case`.
pub fn instrument_residuals<R: Rng + ?Sized>(
    case: &SteeringCase,
    povm: &Povm,
    e: &Instrument,
    rng: &mut R,
) -> Result<Vec<(&'static str, f64, f64)>> {
    let SteeringCase { spec, x, mu } = case;
    let d = spec.total_dim();
    let locality = instrument::is_local(e, &spec.commutant())?;
    let rho = random::random_density(rng, d);
    let b = random::random_operator(rng, d);
    let mut duality: f64 = 0.0;
    let mut prob_sum = 0.0;
    for o in e.outcomes() {
        let post = o.channel.apply_dual(&rho);
        let lhs = (&post * &b).trace();
        let rhs = (&rho * &o.channel.apply(&b)).trace();
        duality = duality.max((lhs - rhs).norm());
        prob_sum += post.trace().re;
    }
    let expected_sum = (&rho * &e.total_effect()).trace().re;
    let top = e.total_effect().eigh().values.last().copied().unwrap_or(0.0);
    let mut out = vec![
        ("compatibility", 1e-10, instrument::is_compatible(e, povm)?),
        ("locality", 1e-10, locality.residual),
        ("preparation", 1e-9, instrument::preparation_residual(e, x, spec, mu)?),
        ("duality", 1e-10, duality),
        ("commutation", 1e-10, instrument::commutation_residual(spec, povm)?),
        ("sub-unital", tol::POS, (top - 1.0).max(0.0)),
        ("probability-sum", 1e-10, (prob_sum - expected_sum).abs()),
    ];
    if let Some(ns) = locality.nonselective {
        out.push(("nonselective", 1e-9, ns));
    }
    Ok(out)
}

fn instrument_case(t: &mut Tally, opts: &SuiteOptions, case: usize) -> Result<()> {
    let sc = steering_case_instance(opts.seed, case, opts.max_dim)?;
    let povm = build_steering_povm(&sc.x, &sc.spec, &sc.mu)?;
    let e = instrument::instrument_from_povm(&sc.spec, &povm)?;
    // Separate stream so the steering family stays identical.
    let mut rng = case_rng(opts.seed ^ 0x5eed_1a57, case as u64);
    for (name, thr, v) in instrument_residuals(&sc, &povm, &e, &mut rng)? {
        t.record(name, thr, v);
    }
    Ok(())
}

/// Twirl invariants on one algebra.
pub fn twirl_residuals<R: Rng + ?Sized>(spec: &AlgebraSpec, rng: &mut R) -> Result<Vec<(&'static str, f64, f64)>> {
    let d = spec.total_dim();
    let phi = twirl_projection(spec);
    let comm = spec.commutant();

    let b = random::random_operator(rng, d);
    let nb = b.norm();
    let pb = phi.apply(&b);
    let idempotence = (phi.apply(&pb) - &pb).norm() / nb;
    let range = comm.membership_residual(&pb)? / nb;

    let fixes = comm
        .basis()
        .iter()
        .map(|c| (phi.apply(c) - c).norm())
        .fold(0.0, f64::max);

    let xs: Vec<Operator> = spec.blocks().iter().map(|bl| random::random_operator(rng, bl.n)).collect();
    let a = spec.embed_blocks(&xs)?;
    let mut center = Operator::zeros(d);
    for (i, x) in xs.iter().enumerate() {
        center += &spec.central_projection(i).scale_c(x.trace() / x.dim() as f64);
    }
    let center_res = (phi.apply(&a) - center).norm() / a.norm();

    let c1 = random::random_commutant_element(rng, spec);
    let c2 = random::random_commutant_element(rng, spec);
    let lhs = phi.apply(&(&(&c1 * &b) * &c2));
    let rhs = &(&c1 * &pb) * &c2;
    let bimodule = (lhs - rhs).norm() / (nb * c1.norm() * c2.norm());

    let mut out = vec![
        ("idempotence", 1e-10, idempotence),
        ("range-in-commutant", 1e-10, range),
        ("fixes-commutant", 1e-12, fixes),
        ("center", 1e-10, center_res),
        ("bimodule", 1e-9, bimodule),
    ];
    if d <= 8 {
        let choi = phi.choi();
        out.push(("choi-positivity", tol::POS, (-choi.min_eigenvalue()).max(0.0)));
    }
    Ok(out)
}

/// Pinching invariants on a random Hermitian with a degenerate spectrum.
fn pinching_residuals<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Vec<(&'static str, f64, f64)>> {
    let levels: Vec<f64> = (0..d).map(|_| f64::from(rng.random_range(0..3u8))).collect();
    let u = unitary(rng, d);
    let t = Operator::diag(&levels).conj_by(&u.adjoint()).hermitian_part();
    let ch = pinching(&t, 1e-6)?;
    let qs = &ch.stages()[0];
    let mut sum = Operator::zeros(d);
    for q in qs {
        sum += q;
    }
    let b = random::random_operator(rng, d);
    let pb = ch.apply(&b);
    let mut distinct = levels.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    Ok(vec![
        ("pinching-resolution", 1e-12, (sum - Operator::identity(d)).norm()),
        ("pinching-idempotence", 1e-10, (ch.apply(&pb) - &pb).norm() / b.norm()),
        ("pinching-clusters", 0.0, if qs.len() == distinct.len() { 0.0 } else { 1.0 }),
    ])
}

/// Haar-ish unitary from the eigenvectors of a random Hermitian.
fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator {
    let eig = random::random_hermitian(rng, d).eigh();
    Operator::from_fn(d, |i, j| eig.vectors[j][i])
}

fn twirl_case(t: &mut Tally, opts: &SuiteOptions, case: usize) -> Result<()> {
    let mut rng = case_rng(opts.seed, case as u64);
    let spec = random::spec_for_case(&mut rng, case, opts.max_dim);
    for (name, thr, v) in twirl_residuals(&spec, &mut rng)? {
        t.record(name, thr, v);
    }
    let d = rng.random_range(1..=6);
    for (name, thr, v) in pinching_residuals(&mut rng, d)? {
        t.record(name, thr, v);
    }
    Ok(())
}

fn operator_core_case(t: &mut Tally, opts: &SuiteOptions, case: usize) -> Result<()> {
    let mut rng = case_rng(opts.seed, case as u64);
    let spec = random::spec_for_case(&mut rng, case, opts.max_dim);
    let d = spec.total_dim();

    t.check("commutant-involution", spec.commutant().commutant() == spec);
    t.check(
        "commutant-dimension",
        spec.commutant().total_dim() == d,
    );

    let b = random::random_operator(&mut rng, d);
    let eb = spec.conditional_expectation(&b)?;
    let idem = (spec.conditional_expectation(&eb)? - &eb).max_abs();
    t.record("conditional-expectation-idempotence", 1e-12, idem);
    let a = random::random_algebra_element(&mut rng, &spec);
    t.record(
        "conditional-expectation-fixes-algebra",
        1e-12,
        (spec.conditional_expectation(&a)? - &a).max_abs(),
    );
    let c = random::random_commutant_element(&mut rng, &spec);
    t.record("commutant-commutes", 1e-10, a.commutator(&c).max_abs());

    let k = rng.random_range(2..=6);
    let (_, mu) = random::steering_instance(&mut rng, &spec, k)?;
    let bary = barycenter(&mu);
    t.record("barycenter-trace", tol::NORM, (bary.trace() - 1.0).abs());
    t.record(
        "barycenter-positivity",
        tol::POS,
        (-bary.density().min_eigenvalue()).max(0.0),
    );

    let rho = SubState::from_density(&spec, &random::random_density(&mut rng, d))?;
    let p = purify(&rho)?;
    let back = p.vector.restrict(&p.algebra)?;
    let round_trip = back
        .blocks()
        .iter()
        .zip(rho.blocks())
        .map(|(x, y)| (x - &y).max_abs())
        .fold(0.0, f64::max);
    t.record("purify-round-trip", 10.0 * tol::HERM, round_trip);

    let n = rng.random_range(2..=4);
    let bob = AlgebraSpec::tensor_right(n, n);
    let full = random::random_vector(&mut rng, n * n);
    t.check("separating-full-rank", is_separating(&full, &bob)?);
    // Schmidt rank n - 1: zero the last Alice row.
    let mut amps = full.amplitudes().to_vec();
    for j in 0..n {
        amps[(n - 1) * n + j] = C64::new(0.0, 0.0);
    }
    let deficient = VectorState::normalized(amps)?;
    t.check("separating-deficient", !is_separating(&deficient, &bob)?);

    let r = random::random_density(&mut rng, d);
    t.record("trace-distance-self", 1e-12, trace_distance(&r, &r)?);
    Ok(())
}

fn bitcommit_case(t: &mut Tally, opts: &SuiteOptions, case: usize) -> Result<()> {
    let mut rng = case_rng(opts.seed, case as u64);
    let n_dense = 1 + case % bitcommit::DENSE_SITES;
    let n = 1 + case % bitcommit::MAX_SITES;

    let r0 = bitcommit::dense_honest_marginal(0, n_dense)?;
    let r1 = bitcommit::dense_honest_marginal(1, n_dense)?;
    t.record("concealment-dense", 1e-12, trace_distance(&r0, &r1)?);
    let cheat = bitcommit::dense_cheat_marginal(n_dense)?;
    t.record("cheat-marginal-dense", 1e-12, trace_distance(&cheat, &r0)?);

    let f0 = bitcommit::factorized_honest_marginal(0, n)?;
    let f1 = bitcommit::factorized_honest_marginal(1, n)?;
    t.record("concealment-factorized", 0.0, bitcommit::factorized_trace_distance(&f0, &f1)?);
    let fc = bitcommit::factorized_cheat_marginal(n)?;
    t.record("cheat-marginal-factorized", 0.0, bitcommit::factorized_trace_distance(&fc, &f0)?);

    let b = rng.random_range(0..2u8);
    let (s, c) = bitcommit::honest_commit(b, n, &mut rng)?;
    t.check("honest-accepted", bitcommit::honest_unveil(&c, &s, b, &mut rng)?.accepted);
    let cc = bitcommit::cheat_commit(n)?;
    for target in 0..2 {
        t.check("cheat-accepted", bitcommit::cheat_unveil(&cc, target, &mut rng)?.accepted);
    }

    let a = bitcommit::unveil_observable(b, n_dense)?;
    let s_rand: Vec<u8> = (0..n_dense).map(|_| rng.random_range(0..2u8)).collect();
    let v = bitcommit::basis_vector(b, &s_rand);
    let lam = bitcommit::cantor_value(&s_rand);
    let eig_res = a
        .mul_vec(&v)
        .iter()
        .zip(&v)
        .map(|(x, y)| (x - y * lam).norm())
        .fold(0.0, f64::max);
    t.record("observable-eigenvector", 1e-12, eig_res);
    t.record(
        "barycenter-uniform",
        1e-12,
        bitcommit::uniform_barycenter_check(b, n_dense)?,
    );
    let sep = bitcommit::min_cantor_separation(n);
    t.record("cantor-separation", 0.1, (1.0 - sep / bitcommit::cantor_gap(n)).max(0.0));
    Ok(())
}

/// Random specs used by property tests elsewhere; exposed for benches.
pub fn sample_specs(seed: u64, count: usize, max_dim: usize) -> Vec<AlgebraSpec> {
    (0..count)
        .map(|i| {
            let mut rng = case_rng(seed, i as u64);
            random::spec_for_case(&mut rng, i, max_dim)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Layout;

    fn run(s: Suite, cases: usize) -> SuiteReport {
        let r = run_suite(s, &SuiteOptions::new(cases, 42));
        for inv in &r.invariants {
            assert!(inv.passed, "{s}: {inv:?} errors {:?}", r.errors);
        }
        assert!(r.passed);
        r
    }

    #[test]
    fn suites_pass_small() {
        for s in Suite::ALL {
            run(s, 14);
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn overrides_apply_and_fail() {
        let mut opts = SuiteOptions::new(3, 1);
        opts.overrides.insert("idempotence".into(), -1.0);
        let r = run_suite(Suite::Twirl, &opts);
        let inv = r.invariant("idempotence").unwrap();
        assert_eq!(inv.threshold, -1.0);
        assert!(!inv.passed && !r.passed);
    }

    #[test]
    fn layout_variety_in_cases() {
        let specs = sample_specs(3, 40, 16);
        assert!(specs.iter().any(|s| s.layout() == Layout::MultiplicityMajor));
        assert!(specs.iter().any(|s| s.layout() == Layout::AlgebraMajor));
    }
}
