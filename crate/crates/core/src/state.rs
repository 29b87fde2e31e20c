//! Vector states, positive functionals on block algebras, and ensembles.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraSpec, Layout};
use crate::error::{Error, Result};
use crate::linalg::{self, Operator, C64};
use crate::tol;

/// Unit vector `x` inducing the functional `ω_x(A) = ⟨x, Ax⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorState {
    #[serde(with = "linalg::complex_vec")]
    amplitudes: Vec<C64>,
}

impl VectorState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = linalg::norm(&amplitudes);
        if (n - 1.0).abs() > tol::NORM * 10.0 {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(VectorState { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = linalg::norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        amplitudes.iter_mut().for_each(|z| *z /= n);
        Self::new(amplitudes)
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![linalg::ZERO; dim];
        v[k] = linalg::ONE;
        VectorState { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `⟨x, Ax⟩`.
    pub fn expectation(&self, a: &Operator) -> C64 {
        a.sandwich(&self.amplitudes, &self.amplitudes)
    }

    pub fn projector(&self) -> Operator {
        Operator::outer(&self.amplitudes)
    }

    /// `ω_x` restricted to `spec`, as a [`SubState`].
    pub fn restrict(&self, spec: &AlgebraSpec) -> Result<SubState> {
        SubState::from_density(spec, &self.projector())
    }
}

/// A positive functional `ρ(B) = Tr(density · B)` on a block algebra with
/// `Tr(density) ≤ 1`. The density is kept inside the algebra, which makes it
/// the unique representative of the functional.
#[derive(Clone, Debug, PartialEq)]
pub struct SubState {
    algebra: AlgebraSpec,
    density: Operator,
}

impl SubState {
    /// From the compact per-block operators `σ_i ∈ M_{n_i}`, so that
    /// `ρ(⊕ X_i ⊗ I) = Σ_i Tr(σ_i X_i)`.
    pub fn from_blocks(spec: &AlgebraSpec, sigmas: &[Operator]) -> Result<Self> {
        let scaled: Vec<Operator> = sigmas
            .iter()
            .zip(spec.blocks())
            .map(|(s, b)| s.scale(1.0 / b.m as f64))
            .collect();
        if sigmas.len() != spec.num_blocks() {
            return Err(Error::DimensionMismatch {
                expected: spec.num_blocks(),
                found: sigmas.len(),
            });
        }
        Self::validated(spec, spec.embed_blocks(&scaled)?)
    }

    /// From any full-space density; only its action on the algebra is kept.
    pub fn from_density(spec: &AlgebraSpec, density: &Operator) -> Result<Self> {
        Self::validated(spec, spec.conditional_expectation(density)?)
    }

    fn validated(spec: &AlgebraSpec, density: Operator) -> Result<Self> {
        let defect = density.hermiticity_defect();
        if defect > tol::HERM * density.max_abs().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        let density = density.hermitian_part();
        let min = density.min_eigenvalue();
        if min < -tol::POS * density.norm().max(1.0) {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        let tr = density.trace().re;
        if tr <= 0.0 || tr > 1.0 + tol::NORM {
            return Err(Error::NotAState(format!("trace {tr} outside (0, 1]")));
        }
        Ok(SubState {
            algebra: spec.clone(),
            density,
        })
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    pub fn density(&self) -> &Operator {
        &self.density
    }

    /// Compact per-block operators `σ_i`.
    pub fn blocks(&self) -> Vec<Operator> {
        self.algebra
            .reduce_blocks(&self.density)
            .expect("density has algebra dimension")
    }

    pub fn trace(&self) -> f64 {
        self.density.trace().re
    }

    /// `ρ(B) = Tr(density · B)`.
    pub fn eval(&self, b: &Operator) -> C64 {
        (&self.density * b).trace()
    }

    /// `λ·ρ`; fails if the result leaves `(0, 1]` in trace.
    pub fn scaled(&self, lambda: f64) -> Result<SubState> {
        Self::validated(&self.algebra, self.density.scale(lambda))
    }

    pub fn is_state(&self) -> bool {
        (self.trace() - 1.0).abs() <= tol::NORM
    }
}

/// One weighted, labeled member of an [`Ensemble`].
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub label: String,
    pub weight: f64,
    pub state: SubState,
}

/// A finitely supported probability measure on the state space of an algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    algebra: AlgebraSpec,
    components: Vec<Component>,
}

impl Ensemble {
    pub fn new(algebra: &AlgebraSpec, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidEnsemble("no components".into()));
        }
        let mut total = 0.0;
        for (k, c) in components.iter().enumerate() {
            if c.weight.is_nan() || c.weight <= 0.0 {
                return Err(Error::InvalidEnsemble(format!(
                    "component {k} has non-positive weight {}",
                    c.weight
                )));
            }
            if c.state.algebra() != algebra {
                return Err(Error::InvalidEnsemble(format!(
                    "component {k} lives on a different algebra"
                )));
            }
            if !c.state.is_state() {
                return Err(Error::InvalidEnsemble(format!(
                    "component {k} has trace {}",
                    c.state.trace()
                )));
            }
            if components[..k].iter().any(|o| o.label == c.label) {
                return Err(Error::InvalidEnsemble(format!(
                    "duplicate label {:?}",
                    c.label
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > tol::NORM {
            return Err(Error::InvalidEnsemble(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Ensemble {
            algebra: algebra.clone(),
            components,
        })
    }

    /// Components labeled `"0"`, `"1"`, … in order.
    pub fn from_weighted(algebra: &AlgebraSpec, items: Vec<(f64, SubState)>) -> Result<Self> {
        let components = items
            .into_iter()
            .enumerate()
            .map(|(k, (weight, state))| Component {
                label: k.to_string(),
                weight,
                state,
            })
            .collect();
        Self::new(algebra, components)
    }

    /// From unnormalized parts `T_j` with `Σ Tr T_j = 1`; weights are the traces.
    pub fn from_parts(algebra: &AlgebraSpec, parts: Vec<SubState>) -> Result<Self> {
        let items = parts
            .into_iter()
            .map(|p| {
                let w = p.trace();
                Ok((w, p.scaled(1.0 / w)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_weighted(algebra, items)
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Replaces the components with `labels` by their weighted average.
    pub fn merge(&self, labels: &[&str], merged_label: &str) -> Result<Ensemble> {
        let (picked, rest): (Vec<_>, Vec<_>) = self
            .components
            .iter()
            .cloned()
            .partition(|c| labels.contains(&c.label.as_str()));
        if picked.len() != labels.len() {
            return Err(Error::LabelMismatch(format!("cannot merge {labels:?}")));
        }
        let weight: f64 = picked.iter().map(|c| c.weight).sum();
        let mut density = Operator::zeros(self.algebra.total_dim());
        for c in &picked {
            density += &c.state.density().scale(c.weight / weight);
        }
        let mut components = rest;
        components.push(Component {
            label: merged_label.to_string(),
            weight,
            state: SubState::validated(&self.algebra, density)?,
        });
        Ensemble::new(&self.algebra, components)
    }
}

/// `Σ λ_i ρ_i`.
pub fn barycenter(mu: &Ensemble) -> SubState {
    let mut density = Operator::zeros(mu.algebra.total_dim());
    for c in &mu.components {
        density += &c.state.density().scale(c.weight);
    }
    SubState {
        algebra: mu.algebra.clone(),
        density,
    }
}

/// Which tensor factor to trace out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Partial trace over one factor of `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace(b: &Operator, dims: (usize, usize), side: Side) -> Result<Operator> {
    let (d1, d2) = dims;
    if b.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            expected: d1 * d2,
            found: b.dim(),
        });
    }
    Ok(match side {
        Side::First => Operator::from_fn(d2, |i, j| {
            (0..d1).map(|k| b.get(k * d2 + i, k * d2 + j)).sum()
        }),
        Side::Second => Operator::from_fn(d1, |i, j| {
            (0..d2).map(|k| b.get(i * d2 + k, j * d2 + k)).sum()
        }),
    })
}

/// A purifying vector together with the algebra it purifies on.
#[derive(Clone, Debug)]
pub struct Purification {
    pub vector: VectorState,
    /// `⊕_i I_{n_i} ⊗ M_{n_i}`: the embedded copy of the purified algebra.
    pub algebra: AlgebraSpec,
}

/// Canonical purification: per block `x_i = Σ_c |c⟩ ⊗ σ_i^{1/2}|c⟩` on
/// `C^{n_i} ⊗ C^{n_i}`, the algebra acting on the second factor.
pub fn purify(rho: &SubState) -> Result<Purification> {
    if !rho.is_state() {
        return Err(Error::NotAState(format!("trace {}", rho.trace())));
    }
    let sigmas = rho.blocks();
    let dims: Vec<(usize, usize)> = rho
        .algebra()
        .blocks()
        .iter()
        .map(|b| (b.n, b.n))
        .collect();
    let ambient = AlgebraSpec::new(&dims, Layout::MultiplicityMajor)?;
    let mut x = vec![linalg::ZERO; ambient.total_dim()];
    for (i, sigma) in sigmas.iter().enumerate() {
        let root = sigma.sqrt_psd();
        let n = sigma.dim();
        for c in 0..n {
            for a in 0..n {
                x[ambient.index(i, a, c)] = root.get(a, c);
            }
        }
    }
    Ok(Purification {
        vector: VectorState::normalized(x)?,
        algebra: ambient,
    })
}

/// Images `B_k x` of `x` under the matrix-unit basis of `spec`.
pub fn orbit(x: &VectorState, spec: &AlgebraSpec) -> Result<Vec<Vec<C64>>> {
    if x.dim() != spec.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dim(),
            found: x.dim(),
        });
    }
    Ok(spec
        .basis()
        .iter()
        .map(|b| b.mul_vec(x.amplitudes()))
        .collect())
}

/// `x` is separating iff `B ↦ Bx` is injective on the algebra.
pub fn is_separating(x: &VectorState, spec: &AlgebraSpec) -> Result<bool> {
    let images = orbit(x, spec)?;
    Ok(linalg::rank(x.dim(), &images) == spec.algebra_dim())
}

/// `½ Σ |eig(a − b)|` for Hermitian `a`, `b`.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    for op in [a, b] {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian {
                defect: op.hermiticity_defect(),
            });
        }
    }
    let diff = a - b;
    Ok(0.5 * diff.eigh().values.iter().map(|v| v.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, ONE, ZERO};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ket(bits: &[f64]) -> Vec<C64> {
        bits.iter().map(|&b| c(b)).collect()
    }

    #[test]
    fn barycenter_examples() {
        let m2 = AlgebraSpec::full(2);
        let p0 = SubState::from_blocks(&m2, &[Operator::diag(&[1.0, 0.0])]).unwrap();
        let p1 = SubState::from_blocks(&m2, &[Operator::diag(&[0.0, 1.0])]).unwrap();

        let point = Ensemble::from_weighted(&m2, vec![(1.0, p0.clone())]).unwrap();
        assert_eq!(barycenter(&point).density(), p0.density());

        let half = Ensemble::from_weighted(&m2, vec![(0.5, p0.clone()), (0.5, p1.clone())]).unwrap();
        assert!((barycenter(&half).density().clone() - Operator::identity(2).scale(0.5)).max_abs() < 1e-15);

        let skew = Ensemble::from_weighted(&m2, vec![(0.75, p0), (0.25, p1)]).unwrap();
        assert!((barycenter(&skew).density().clone() - Operator::diag(&[0.75, 0.25])).max_abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_bad_weights() {
        let m2 = AlgebraSpec::full(2);
        let p0 = SubState::from_blocks(&m2, &[Operator::diag(&[1.0, 0.0])]).unwrap();
        assert!(Ensemble::from_weighted(&m2, vec![(0.5, p0.clone())]).is_err());
        assert!(Ensemble::from_weighted(&m2, vec![(1.5, p0.clone()), (-0.5, p0)]).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = Operator::outer(&ket(&[s, 0.0, 0.0, s]));
        let tr = partial_trace(&phi, (2, 2), Side::First).unwrap();
        assert!((tr - Operator::identity(2).scale(0.5)).max_abs() < 1e-15);

        let ra = Operator::diag(&[0.2, 0.3]);
        let rb = Operator::from_rows(&[vec![c(0.6), C64::new(0.1, 0.2)], vec![C64::new(0.1, -0.2), c(0.4)]]).unwrap();
        let tr = partial_trace(&ra.kron(&rb), (2, 2), Side::First).unwrap();
        assert!((tr - rb.scale(0.5)).max_abs() < 1e-15);

        // Hand expansion: P_x has entries 3/4 at (0,0), 1/4 at (3,3), √3/4 at (0,3),(3,0).
        let x = ket(&[0.75f64.sqrt(), 0.0, 0.0, 0.25f64.sqrt()]);
        let tr = partial_trace(&Operator::outer(&x), (2, 2), Side::Second).unwrap();
        assert!((tr - Operator::diag(&[0.75, 0.25])).max_abs() < 1e-15);

        assert!(partial_trace(&phi, (3, 2), Side::First).is_err());
    }

    #[test]
    fn purify_examples() {
        let m2 = AlgebraSpec::full(2);
        let pure = SubState::from_blocks(&m2, &[Operator::diag(&[1.0, 0.0])]).unwrap();
        let p = purify(&pure).unwrap();
        assert_eq!(p.vector.amplitudes(), &ket(&[1.0, 0.0, 0.0, 0.0])[..]);
        assert_eq!(p.algebra, AlgebraSpec::tensor_right(2, 2));

        let mixed = SubState::from_blocks(&m2, &[Operator::identity(2).scale(0.5)]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = purify(&mixed).unwrap();
        for (a, b) in p.vector.amplitudes().iter().zip(ket(&[s, 0.0, 0.0, s])) {
            assert!((a - b).norm() < 1e-15);
        }

        let skew = SubState::from_blocks(&m2, &[Operator::diag(&[0.75, 0.25])]).unwrap();
        let p = purify(&skew).unwrap();
        let expected = ket(&[0.75f64.sqrt(), 0.0, 0.0, 0.5]);
        for (a, b) in p.vector.amplitudes().iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
        let back = partial_trace(&p.vector.projector(), (2, 2), Side::First).unwrap();
        assert!((back - Operator::diag(&[0.75, 0.25])).max_abs() < 1e-14);
    }

    #[test]
    fn purify_rejects_substates() {
        let m2 = AlgebraSpec::full(2);
        let sub = SubState::from_blocks(&m2, &[Operator::diag(&[0.5, 0.0])]).unwrap();
        assert!(matches!(purify(&sub), Err(Error::NotAState(_))));
        assert!(SubState::from_blocks(&m2, &[pauli::z()]).is_err());
    }

    #[test]
    fn separating_examples() {
        let bob = AlgebraSpec::tensor_right(2, 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = VectorState::new(ket(&[s, 0.0, 0.0, s])).unwrap();
        assert!(is_separating(&phi, &bob).unwrap());
        assert!(!is_separating(&VectorState::basis(4, 0), &bob).unwrap());
        let x = VectorState::new(ket(&[0.75f64.sqrt(), 0.0, 0.0, 0.5])).unwrap();
        assert!(is_separating(&x, &bob).unwrap());
    }

    #[test]
    fn trace_distance_examples() {
        let r = Operator::diag(&[0.75, 0.25]);
        assert!(trace_distance(&r, &r).unwrap() < 1e-15);
        let d = trace_distance(&Operator::diag(&[1.0, 0.0]), &Operator::diag(&[0.0, 1.0])).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let d = trace_distance(&Operator::identity(2).scale(0.5), &r).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        let nh = Operator::outer2(&[ONE, ZERO], &[ZERO, ONE]);
        assert!(matches!(trace_distance(&nh, &r), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn restrict_matches_partial_trace() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = VectorState::new(ket(&[s, 0.0, 0.0, s])).unwrap();
        let rho = phi.restrict(&AlgebraSpec::tensor_right(2, 2)).unwrap();
        let sigma = &rho.blocks()[0];
        assert!((sigma.clone() - Operator::identity(2).scale(0.5)).max_abs() < 1e-15);
    }
}
