//! Completely positive instruments: labeled families of Kraus channels.
//!
//! Outcome `i` acts in the observable picture as `E[i](B) = Σ_j K_j* B K_j`.
//! A set of labels `S` acts as the sum of its members.

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraSpec;
use crate::error::{Error, Result};
use crate::linalg::Operator;
use crate::state::{Ensemble, VectorState};
use crate::steering::{build_steering_povm, Povm};
use crate::tol;
use crate::twirl::{twirl_projection, KrausChannel};

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub channel: KrausChannel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    dim: usize,
    outcomes: Vec<Outcome>,
}

impl Instrument {
    /// Checks dimensions, label uniqueness and `Σ_i E[i](I) ≤ I`.
    pub fn new(dim: usize, outcomes: Vec<Outcome>) -> Result<Self> {
        for (k, o) in outcomes.iter().enumerate() {
            if o.channel.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: o.channel.dim(),
                });
            }
            if outcomes[..k].iter().any(|p| p.label == o.label) {
                return Err(Error::LabelMismatch(format!("duplicate label {:?}", o.label)));
            }
        }
        let inst = Instrument { dim, outcomes };
        let top = inst.total_effect().eigh().values.last().copied().unwrap_or(0.0);
        if top > 1.0 + tol::POS {
            return Err(Error::NotSubUnital { max_eigenvalue: top });
        }
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|o| o.label.as_str())
    }

    pub fn channel(&self, label: &str) -> Result<&KrausChannel> {
        self.outcomes
            .iter()
            .find(|o| o.label == label)
            .map(|o| &o.channel)
            .ok_or_else(|| Error::LabelMismatch(format!("no outcome {label:?}")))
    }

    /// `E[S](B) = Σ_{i∈S} E[i](B)`.
    pub fn apply(&self, labels: &[&str], b: &Operator) -> Result<Operator> {
        self.check_dim(b.dim())?;
        let mut out = Operator::zeros(self.dim);
        for l in labels {
            out += &self.channel(l)?.apply(b);
        }
        Ok(out)
    }

    /// The nonselective map `E[X](B)`.
    pub fn apply_all(&self, b: &Operator) -> Result<Operator> {
        self.check_dim(b.dim())?;
        let mut out = Operator::zeros(self.dim);
        for o in &self.outcomes {
            out += &o.channel.apply(b);
        }
        Ok(out)
    }

    /// `Σ_i E[i](I)`.
    pub fn total_effect(&self) -> Operator {
        let mut out = Operator::zeros(self.dim);
        for o in &self.outcomes {
            out += &o.channel.effect();
        }
        out
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeWire {
    label: String,
    kraus: Vec<Operator>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstrumentWire {
    outcomes: Vec<OutcomeWire>,
}

impl Serialize for Instrument {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InstrumentWire {
            outcomes: self
                .outcomes
                .iter()
                .map(|o| OutcomeWire {
                    label: o.label.clone(),
                    kraus: o.channel.kraus_ops(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instrument {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = InstrumentWire::deserialize(d)?;
        let dim = w
            .outcomes
            .iter()
            .flat_map(|o| o.kraus.first())
            .map(Operator::dim)
            .next()
            .unwrap_or(0);
        let outcomes = w
            .outcomes
            .into_iter()
            .map(|o| {
                Ok(Outcome {
                    label: o.label,
                    channel: KrausChannel::new(dim, o.kraus)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Instrument::new(dim, outcomes).map_err(D::Error::custom)
    }
}

/// The compatible POVM `A_i = E[i](I)`, placed in the full algebra with
/// completeness target `Σ_i A_i`.
pub fn induced_povm(e: &Instrument) -> Result<Povm> {
    let elements = e
        .outcomes
        .iter()
        .map(|o| (o.label.clone(), o.channel.effect().hermitian_part()))
        .collect();
    Povm::new(AlgebraSpec::full(e.dim.max(1)), elements, e.total_effect())
}

/// Lüders instrument `E[i](B) = A_i^{1/2} B A_i^{1/2}`.
pub fn canonical_instrument(p: &Povm) -> Result<Instrument> {
    let outcomes = p
        .elements
        .iter()
        .map(|(label, a)| {
            if !a.is_positive() {
                return Err(Error::NotPositive {
                    min_eigenvalue: a.min_eigenvalue(),
                });
            }
            Ok(Outcome {
                label: label.clone(),
                channel: KrausChannel::new(a.dim(), vec![a.sqrt_psd()])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(p.dim(), outcomes)
}

/// `max_i ‖E[i](I) − A_i‖`. The label sets must coincide.
pub fn is_compatible(e: &Instrument, p: &Povm) -> Result<f64> {
    if e.len() != p.len() {
        return Err(Error::LabelMismatch(format!(
            "instrument has {} outcomes, POVM has {} elements",
            e.len(),
            p.len()
        )));
    }
    e.check_dim(p.dim())?;
    let mut worst: f64 = 0.0;
    for o in &e.outcomes {
        let a = p
            .element(&o.label)
            .ok_or_else(|| Error::LabelMismatch(format!("POVM has no element {:?}", o.label)))?;
        worst = worst.max((o.channel.effect() - a).norm());
    }
    Ok(worst)
}

/// Residuals of the locality test against an algebra `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Locality {
    /// `max ‖E[i](C) − E[i](I)·C‖` over outcomes and a basis of `R′`.
    pub residual: f64,
    /// `max ‖E[X](C) − C‖` over the same basis, when `E[X](I) = I`.
    pub nonselective: Option<f64>,
}

impl Locality {
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Tests whether `E` is local to `spec`: on the commutant it must act as
/// left multiplication by its effect.
pub fn is_local(e: &Instrument, spec: &AlgebraSpec) -> Result<Locality> {
    e.check_dim(spec.total_dim())?;
    let basis = spec.commutant().basis();
    let effects: Vec<Operator> = e.outcomes.iter().map(|o| o.channel.effect()).collect();
    let mut residual: f64 = 0.0;
    for c in &basis {
        for (o, eff) in e.outcomes.iter().zip(&effects) {
            residual = residual.max((o.channel.apply(c) - eff * c).norm());
        }
    }
    let unital = (e.total_effect() - Operator::identity(e.dim)).max_abs() <= tol::HERM;
    let nonselective = if unital {
        let mut worst: f64 = 0.0;
        for c in &basis {
            worst = worst.max((e.apply_all(c)? - c).norm());
        }
        Some(worst)
    } else {
        None
    };
    Ok(Locality {
        residual,
        nonselective,
    })
}

/// Instrument realizing a steering POVM `{A_i}` for Bob's algebra `spec_b`:
/// `E[i](B) = A_i^{1/2} Φ(B) A_i^{1/2}` where `Φ` is the twirl onto `spec_b`.
/// Each Kraus operator is `K_g A_i^{1/2}` for `K_g` a Kraus operator of `Φ`.
pub fn instrument_from_povm(spec_b: &AlgebraSpec, povm: &Povm) -> Result<Instrument> {
    if povm.dim() != spec_b.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec_b.total_dim(),
            found: povm.dim(),
        });
    }
    let phi = twirl_projection(&spec_b.commutant());
    let outcomes = povm
        .elements
        .iter()
        .map(|(label, a)| {
            Ok(Outcome {
                label: label.clone(),
                channel: phi.then_conjugate(&a.sqrt_psd())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(povm.dim(), outcomes)
}

/// Local instrument on `spec_b.commutant()` whose outcome `i` prepares the
/// ensemble component `i` on `spec_b`.
pub fn preparation_instrument(
    x: &VectorState,
    spec_b: &AlgebraSpec,
    mu: &Ensemble,
) -> Result<Instrument> {
    let povm = build_steering_povm(x, spec_b, mu)?;
    instrument_from_povm(spec_b, &povm)
}

/// `max_{i,k} ‖[A_i, Φ(B_k)]‖` with `Φ` the twirl onto `spec_b` and `B_k`
/// ranging over a basis of `spec_b`. Guards `A_i^{1/2}Φ(B)A_i^{1/2} = Φ(B)A_i`.
pub fn commutation_residual(spec_b: &AlgebraSpec, povm: &Povm) -> Result<f64> {
    if povm.dim() != spec_b.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec_b.total_dim(),
            found: povm.dim(),
        });
    }
    let phi = twirl_projection(&spec_b.commutant());
    let images: Vec<Operator> = spec_b.basis().iter().map(|b| phi.apply(b)).collect();
    let mut worst: f64 = 0.0;
    for (_, a) in &povm.elements {
        for img in &images {
            worst = worst.max(a.commutator(img).norm());
        }
    }
    Ok(worst)
}

/// `max_{i,k} |⟨x, E[i](B_k) x⟩ − λ_i ρ_i(B_k)|` over the basis of `spec_b`.
pub fn preparation_residual(
    e: &Instrument,
    x: &VectorState,
    spec_b: &AlgebraSpec,
    mu: &Ensemble,
) -> Result<f64> {
    e.check_dim(x.dim())?;
    let basis = spec_b.basis();
    let mut worst: f64 = 0.0;
    for c in mu.components() {
        let ch = e.channel(&c.label)?;
        for b in &basis {
            let lhs = x.expectation(&ch.apply(b));
            worst = worst.max((lhs - c.state.eval(b) * c.weight).norm());
        }
    }
    Ok(worst)
}

/// Outcome probability and normalized post-measurement density,
/// `Σ_j K_j ρ K_j* / p`.
pub fn posterior_state(e: &Instrument, rho: &Operator, label: &str) -> Result<(f64, Operator)> {
    e.check_dim(rho.dim())?;
    if !rho.is_positive() {
        return Err(Error::NotPositive {
            min_eigenvalue: rho.min_eigenvalue(),
        });
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 10.0 * tol::NORM {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    let post = e.channel(label)?.apply_dual(rho);
    let p = post.trace().re;
    if p <= tol::NORM {
        return Err(Error::ImpossibleOutcome {
            label: label.to_string(),
            probability: p,
        });
    }
    Ok((p, post.scale(1.0 / p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, C64, ONE, ZERO};
    use crate::state::{partial_trace, Side, SubState};

    fn phi_plus() -> VectorState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        VectorState::new(vec![C64::from(s), ZERO, ZERO, C64::from(s)]).unwrap()
    }

    fn bob() -> AlgebraSpec {
        AlgebraSpec::tensor_right(2, 2)
    }

    fn proj_ensemble() -> Ensemble {
        let spec = bob();
        let p0 = SubState::from_blocks(&spec, &[Operator::diag(&[1.0, 0.0])]).unwrap();
        let p1 = SubState::from_blocks(&spec, &[Operator::diag(&[0.0, 1.0])]).unwrap();
        Ensemble::from_weighted(&spec, vec![(0.5, p0), (0.5, p1)]).unwrap()
    }

    fn povm(elements: Vec<(&str, Operator)>) -> Povm {
        let d = elements[0].1.dim();
        let total = elements.iter().fold(Operator::zeros(d), |acc, (_, e)| acc + e);
        Povm::new(
            AlgebraSpec::full(d),
            elements.into_iter().map(|(l, e)| (l.to_string(), e)).collect(),
            total,
        )
        .unwrap()
    }

    #[test]
    fn induced_povm_examples() {
        let p = povm(vec![("a", Operator::diag(&[0.7, 0.2])), ("b", Operator::diag(&[0.3, 0.8]))]);
        let e = canonical_instrument(&p).unwrap();
        let q = induced_povm(&e).unwrap();
        for (l, a) in &p.elements {
            assert!((q.element(l).unwrap() - a).max_abs() < 1e-12);
        }

        let half = KrausChannel::new(2, vec![Operator::identity(2).scale(0.5)]).unwrap();
        let e = Instrument::new(2, vec![Outcome { label: "x".into(), channel: half }]).unwrap();
        let q = induced_povm(&e).unwrap();
        assert!((q.element("x").unwrap() - Operator::identity(2).scale(0.25)).max_abs() < 1e-15);
    }

    #[test]
    fn canonical_examples() {
        let e = canonical_instrument(&povm(vec![("1", Operator::identity(3))])).unwrap();
        let b = Operator::from_fn(3, |i, j| C64::new(i as f64, j as f64));
        assert!((e.apply(&["1"], &b).unwrap() - &b).max_abs() < 1e-14);

        let e = canonical_instrument(&povm(vec![
            ("0", Operator::diag(&[1.0, 0.0])),
            ("1", Operator::diag(&[0.0, 1.0])),
        ]))
        .unwrap();
        let k = &e.channel("1").unwrap().kraus_ops()[0];
        assert!((k - Operator::diag(&[0.0, 1.0])).max_abs() < 1e-14);

        let e = canonical_instrument(&povm(vec![
            ("a", Operator::identity(2).scale(0.5)),
            ("b", Operator::identity(2).scale(0.5)),
        ]))
        .unwrap();
        let k = &e.channel("b").unwrap().kraus_ops()[0];
        assert!((k - Operator::identity(2).scale(0.5f64.sqrt())).max_abs() < 1e-14);
    }

    #[test]
    fn canonical_rejects_non_positive() {
        let bad = Povm {
            algebra: AlgebraSpec::full(2),
            elements: vec![("z".into(), pauli::z())],
            completeness_target: pauli::z(),
        };
        assert!(matches!(canonical_instrument(&bad), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn compatibility_examples() {
        let p = povm(vec![("a", Operator::diag(&[0.6, 0.1])), ("b", Operator::diag(&[0.4, 0.9]))]);
        assert!(is_compatible(&canonical_instrument(&p).unwrap(), &p).unwrap() < 1e-12);

        let id = Instrument::new(
            2,
            vec![Outcome { label: "a".into(), channel: KrausChannel::identity(2) }],
        )
        .unwrap();
        let half = povm(vec![("a", Operator::identity(2).scale(0.5))]);
        assert!((is_compatible(&id, &half).unwrap() - 0.5).abs() < 1e-14);

        let other = povm(vec![("z", Operator::identity(2).scale(0.5))]);
        assert!(matches!(is_compatible(&id, &other), Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn locality_examples() {
        // Lüders on Alice's side of C²⊗C².
        let alice = AlgebraSpec::tensor_left(2, 2);
        let a0 = Operator::diag(&[0.8, 0.3]).kron(&Operator::identity(2));
        let a1 = Operator::identity(4) - &a0;
        let e = canonical_instrument(&povm(vec![("0", a0), ("1", a1)])).unwrap();
        let loc = is_local(&e, &alice).unwrap();
        assert!(loc.residual < 1e-12);
        assert!(loc.nonselective.unwrap() < 1e-12);

        // A unitary kick σ_x ⊗ I lives in M_2 ⊗ I, so it is local there and
        // disturbs Alice-side observables when tested against I ⊗ M_2.
        let kick = KrausChannel::new(4, vec![pauli::x().kron(&Operator::identity(2))]).unwrap();
        let e = Instrument::new(4, vec![Outcome { label: "k".into(), channel: kick }]).unwrap();
        assert!(is_local(&e, &alice).unwrap().residual < 1e-14);
        let r = is_local(&e, &bob()).unwrap().residual;
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn phi_plus_preparation() {
        let x = phi_plus();
        let spec = bob();
        let mu = proj_ensemble();
        let povm = build_steering_povm(&x, &spec, &mu).unwrap();
        let e = instrument_from_povm(&spec, &povm).unwrap();
        assert!(is_compatible(&e, &povm).unwrap() < 1e-10);
        assert!(is_local(&e, &spec.commutant()).unwrap().residual < 1e-10);
        assert!(preparation_residual(&e, &x, &spec, &mu).unwrap() < 1e-9);
        assert!(commutation_residual(&spec, &povm).unwrap() < 1e-10);

        let rho = x.projector();
        for (i, c) in mu.components().iter().enumerate() {
            let (p, post) = posterior_state(&e, &rho, &c.label).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
            let bob_marginal = partial_trace(&post, (2, 2), Side::First).unwrap();
            let mut want = [0.0, 0.0];
            want[i] = 1.0;
            assert!((bob_marginal - Operator::diag(&want)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn point_mass_acts_as_expectation() {
        let x = phi_plus();
        let spec = bob();
        let rho = x.restrict(&spec).unwrap();
        let mu = Ensemble::from_weighted(&spec, vec![(1.0, rho)]).unwrap();
        let e = preparation_instrument(&x, &spec, &mu).unwrap();
        assert_eq!(e.len(), 1);
        for b in spec.basis() {
            let got = x.expectation(&e.apply(&["0"], &b).unwrap());
            assert!((got - x.expectation(&b)).norm() < 1e-12);
        }
    }

    #[test]
    fn superselection_two_sectors() {
        // Two sectors, each an Alice qubit ⊗ Bob qubit; Bob holds I ⊗ M_2 in each.
        let spec = AlgebraSpec::new(&[(2, 2), (2, 2)], crate::algebra::Layout::MultiplicityMajor)
            .unwrap();
        assert_eq!(spec.total_dim(), 8);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps: Vec<C64> = [0.5, 0.0, 0.0, 0.5, s * 0.75f64.sqrt(), 0.0, 0.0, s * 0.5]
            .iter()
            .map(|&v| C64::from(v))
            .collect();
        let x = VectorState::new(amps).unwrap();
        let zero = Operator::zeros(2);
        let parts = vec![
            (0.5, SubState::from_blocks(&spec, &[Operator::identity(2).scale(0.5), zero.clone()]).unwrap()),
            (0.375, SubState::from_blocks(&spec, &[zero.clone(), Operator::diag(&[1.0, 0.0])]).unwrap()),
            (0.125, SubState::from_blocks(&spec, &[zero, Operator::diag(&[0.0, 1.0])]).unwrap()),
        ];
        let mu = Ensemble::from_weighted(&spec, parts).unwrap();
        let povm = build_steering_povm(&x, &spec, &mu).unwrap();
        let e = instrument_from_povm(&spec, &povm).unwrap();
        assert!(is_compatible(&e, &povm).unwrap() < 1e-9);
        assert!(is_local(&e, &spec.commutant()).unwrap().residual < 1e-9);
        assert!(preparation_residual(&e, &x, &spec, &mu).unwrap() < 1e-9);
    }

    #[test]
    fn posterior_examples() {
        let rho = Operator::diag(&[0.3, 0.7]);
        let id = Instrument::new(
            2,
            vec![Outcome { label: "id".into(), channel: KrausChannel::identity(2) }],
        )
        .unwrap();
        let (p, post) = posterior_state(&id, &rho, "id").unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        assert!((post - &rho).max_abs() < 1e-14);

        let e = canonical_instrument(&povm(vec![
            ("0", Operator::diag(&[1.0, 0.0])),
            ("1", Operator::diag(&[0.0, 1.0])),
        ]))
        .unwrap();
        let mixed = Operator::identity(2).scale(0.5);
        for (i, l) in ["0", "1"].iter().enumerate() {
            let (p, post) = posterior_state(&e, &mixed, l).unwrap();
            assert!((p - 0.5).abs() < 1e-14);
            let mut want = [0.0, 0.0];
            want[i] = 1.0;
            assert!((post - Operator::diag(&want)).max_abs() < 1e-14);
        }
        let pure = Operator::diag(&[1.0, 0.0]);
        assert!(matches!(
            posterior_state(&e, &pure, "1"),
            Err(Error::ImpossibleOutcome { .. })
        ));
    }

    #[test]
    fn duality_holds() {
        let x = phi_plus();
        let spec = bob();
        let e = preparation_instrument(&x, &spec, &proj_ensemble()).unwrap();
        let rho = Operator::diag(&[0.1, 0.2, 0.3, 0.4]);
        let b = Operator::from_fn(4, |i, j| C64::new((i * j) as f64 - 1.0, i as f64 - j as f64));
        for o in e.outcomes() {
            let lhs = (&o.channel.apply_dual(&rho) * &b).trace();
            let rhs = (&rho * &o.channel.apply(&b)).trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn instrument_json_shape() {
        let e = canonical_instrument(&povm(vec![("only", Operator::identity(1))])).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"outcomes":[{"label":"only","kraus":[[[[1.0,0.0]]]]}]}"#);
        let back: Instrument = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(
            back.channel("only").unwrap().kraus_ops()[0].get(0, 0),
            ONE
        );
    }

    #[test]
    fn rejects_super_unital() {
        let k = KrausChannel::identity(2);
        let outcomes = vec![
            Outcome { label: "a".into(), channel: k.clone() },
            Outcome { label: "b".into(), channel: k },
        ];
        assert!(Instrument::new(2, outcomes).is_err());
    }
}
