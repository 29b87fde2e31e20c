//! Steering POVMs: from a vector state and an ensemble on Bob's algebra to
//! positive operators in the commutant that prepare each ensemble member.

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, Operator, C64};
use crate::state::{barycenter, orbit, Ensemble, SubState, VectorState};
use crate::tol;

/// A labeled family of positive operators summing to `completeness_target`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    /// The algebra the elements are required to live in.
    pub algebra: AlgebraSpec,
    pub elements: Vec<(String, Operator)>,
    pub completeness_target: Operator,
}

impl Povm {
    pub fn new(
        algebra: AlgebraSpec,
        elements: Vec<(String, Operator)>,
        completeness_target: Operator,
    ) -> Result<Self> {
        let d = completeness_target.dim();
        if algebra.total_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: algebra.total_dim(),
                found: d,
            });
        }
        for (label, e) in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: e.dim(),
                });
            }
            if !e.is_positive() {
                return Err(Error::NotPositive {
                    min_eigenvalue: e.min_eigenvalue(),
                });
            }
            if elements.iter().filter(|(l, _)| l == label).count() > 1 {
                return Err(Error::LabelMismatch(format!("duplicate label {label:?}")));
            }
        }
        Ok(Povm {
            algebra,
            elements,
            completeness_target,
        })
    }

    pub fn dim(&self) -> usize {
        self.completeness_target.dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|(l, _)| l.as_str())
    }

    pub fn element(&self, label: &str) -> Option<&Operator> {
        self.elements
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, e)| e)
    }

    /// `A(S) = Σ_{i∈S} A_i`.
    pub fn subset(&self, labels: &[&str]) -> Result<Operator> {
        let mut out = Operator::zeros(self.dim());
        for l in labels {
            out += self
                .element(l)
                .ok_or_else(|| Error::LabelMismatch(format!("no element {l:?}")))?;
        }
        Ok(out)
    }

    pub fn total(&self) -> Operator {
        let mut out = Operator::zeros(self.dim());
        for (_, e) in &self.elements {
            out += e;
        }
        out
    }

    /// `‖Σ A_i − target‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        (self.total() - &self.completeness_target).max_abs()
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|(_, e)| e.min_eigenvalue())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance of an element from [`Povm::algebra`].
    pub fn membership_residual(&self) -> f64 {
        self.elements
            .iter()
            .map(|(_, e)| {
                self.algebra
                    .membership_residual(e)
                    .expect("element dims checked")
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmElementWire {
    label: String,
    matrix: Operator,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmWire {
    completeness_target: Operator,
    elements: Vec<PovmElementWire>,
}

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PovmWire {
            completeness_target: self.completeness_target.clone(),
            elements: self
                .elements
                .iter()
                .map(|(label, matrix)| PovmElementWire {
                    label: label.clone(),
                    matrix: matrix.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

/// Deserialized POVMs carry no algebra; they are placed in the full `B(H)`.
impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = PovmWire::deserialize(d)?;
        let algebra = AlgebraSpec::full(w.completeness_target.dim().max(1));
        Povm::new(
            algebra,
            w.elements.into_iter().map(|e| (e.label, e.matrix)).collect(),
            w.completeness_target,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Thresholds used while synthesizing a steering POVM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringTolerances {
    /// Largest residual `|⟨x, H B x⟩ − ρ(B)|` (and eigenvalue clipping) accepted.
    pub residual: f64,
    /// Largest barycenter deviation on the algebra basis.
    pub barycenter: f64,
}

impl Default for SteeringTolerances {
    fn default() -> Self {
        SteeringTolerances {
            residual: tol::RES,
            barycenter: tol::BARY,
        }
    }
}

fn check_dims(x: &VectorState, spec: &AlgebraSpec) -> Result<()> {
    if x.dim() != spec.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Orthogonal projection onto `[Bx]`.
pub fn cyclic_projection(x: &VectorState, spec: &AlgebraSpec) -> Result<Operator> {
    let span = linalg::orthonormal_span(x.dim(), &orbit(x, spec)?);
    let mut p = Operator::zeros(x.dim());
    for u in &span {
        p += &Operator::outer(u);
    }
    Ok(p)
}

/// Largest `|ρ(B_k) − ω(B_k)|` over the matrix-unit basis of the algebra.
pub fn functional_residual(spec: &AlgebraSpec, f: impl Fn(&Operator) -> C64, g: impl Fn(&Operator) -> C64) -> f64 {
    spec.basis()
        .iter()
        .map(|b| (f(b) - g(b)).norm())
        .fold(0.0, f64::max)
}

/// The operator `H ∈ B′`, `0 ≤ H ≤ I`, with `ρ(B) = ⟨x, H B x⟩` for all
/// `B ∈ B` and `H = 0` on the complement of `[Bx]`.
pub fn solve_commutant_operator(
    x: &VectorState,
    spec: &AlgebraSpec,
    rho: &SubState,
) -> Result<Operator> {
    solve_commutant_operator_with(x, spec, rho, tol::RES)
}

pub fn solve_commutant_operator_with(
    x: &VectorState,
    spec: &AlgebraSpec,
    rho: &SubState,
    residual_tol: f64,
) -> Result<Operator> {
    check_dims(x, spec)?;
    if rho.algebra() != spec {
        return Err(Error::InvalidEnsemble(
            "functional lives on a different algebra".into(),
        ));
    }
    let d = x.dim();
    let basis = spec.basis();
    let k = basis.len();
    let images: Vec<Vec<C64>> = basis.iter().map(|b| b.mul_vec(x.amplitudes())).collect();

    // Gram system ⟨B_j x, H B_k x⟩ = ρ(B_j* B_k), i.e. V* H V = R with
    // V = [B_1 x … B_K x]. Its minimal solution is H = G⁺ V R V* G⁺ with G = V V*.
    let pairs = linalg::range_eigenpairs(d, &images);
    let r = nalgebra::DMatrix::from_fn(k, k, |j, c| rho.eval(&(&basis[j].adjoint() * &basis[c])));
    let y = nalgebra::DMatrix::from_fn(k, pairs.len(), |c, p| linalg::inner(&images[c], &pairs[p].1));
    let mut m = y.adjoint() * r * &y;
    for p in 0..pairs.len() {
        for q in 0..pairs.len() {
            m[(p, q)] /= pairs[p].0 * pairs[q].0;
        }
    }
    let u = nalgebra::DMatrix::from_fn(d, pairs.len(), |i, p| pairs[p].1[i]);
    let h = Operator::from_matrix(&u * m * u.adjoint())?;

    // Snap onto the commutant, then Hermitize and clip to [0, 1].
    let h = spec.commutant().conditional_expectation(&h)?.hermitian_part();
    let eig = h.eigh();
    let lo = eig.values.first().copied().unwrap_or(0.0);
    let hi = eig.values.last().copied().unwrap_or(0.0);
    let excess = (-lo).max(hi - 1.0).max(0.0);
    if excess > residual_tol {
        return Err(Error::Infeasible { residual: excess });
    }
    let h = h.spectral_map(|l| l.clamp(0.0, 1.0));

    let residual = basis
        .iter()
        .zip(&images)
        .map(|(b, bx)| (linalg::inner(x.amplitudes(), &h.mul_vec(bx)) - rho.eval(b)).norm())
        .fold(0.0, f64::max);
    if residual > residual_tol {
        return Err(Error::Infeasible { residual });
    }
    Ok(h)
}

/// One element `A_i = H(λ_i ρ_i)` per ensemble component, labeled like the
/// component; the completeness target is the projection onto `[Bx]`.
pub fn build_steering_povm(x: &VectorState, spec: &AlgebraSpec, mu: &Ensemble) -> Result<Povm> {
    build_steering_povm_with(x, spec, mu, SteeringTolerances::default())
}

pub fn build_steering_povm_with(
    x: &VectorState,
    spec: &AlgebraSpec,
    mu: &Ensemble,
    tols: SteeringTolerances,
) -> Result<Povm> {
    check_dims(x, spec)?;
    if mu.algebra() != spec {
        return Err(Error::InvalidEnsemble(
            "ensemble lives on a different algebra".into(),
        ));
    }
    let bary = barycenter(mu);
    let residual = functional_residual(spec, |b| x.expectation(b), |b| bary.eval(b));
    if residual > tols.barycenter {
        return Err(Error::BarycenterMismatch { residual });
    }
    let elements = mu
        .components()
        .iter()
        .map(|c| {
            let part = c.state.scaled(c.weight)?;
            let h = solve_commutant_operator_with(x, spec, &part, tols.residual)?;
            Ok((c.label.clone(), h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm {
        algebra: spec.commutant(),
        elements,
        completeness_target: cyclic_projection(x, spec)?,
    })
}

/// `max_{i,k} |⟨A_i^{1/2}x, B_k A_i^{1/2}x⟩ − λ_i ρ_i(B_k)|` over the
/// matrix-unit basis, matching POVM elements to components by label.
pub fn verify_preparation(
    x: &VectorState,
    spec: &AlgebraSpec,
    mu: &Ensemble,
    povm: &Povm,
) -> Result<f64> {
    check_dims(x, spec)?;
    if povm.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: povm.dim(),
        });
    }
    let basis = spec.basis();
    let mut worst: f64 = 0.0;
    for c in mu.components() {
        let a = povm
            .element(&c.label)
            .ok_or_else(|| Error::LabelMismatch(format!("POVM has no element {:?}", c.label)))?;
        let y = a.sqrt_psd().mul_vec(x.amplitudes());
        for b in &basis {
            let lhs = b.sandwich(&y, &y);
            let rhs = c.state.eval(b) * c.weight;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// Outcome probability `‖A^{1/2}x‖²` and the normalized posterior vector.
pub fn posterior_vector(x: &VectorState, a: &Operator) -> Result<(f64, VectorState)> {
    let y = a.sqrt_psd().mul_vec(x.amplitudes());
    let p = linalg::norm(&y).powi(2);
    if p <= tol::NORM {
        return Err(Error::ImpossibleOutcome {
            label: String::new(),
            probability: p,
        });
    }
    Ok((p, VectorState::normalized(y)?))
}
