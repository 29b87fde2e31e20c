//! Kraus channels, Weyl operators and the twirl projection onto a commutant,
//! plus Lüders pinching onto the spectral projections of an observable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraSpec;
use crate::error::{Error, Result};
use crate::linalg::{Operator, C64};

/// A completely positive map in Kraus form.
///
/// The Kraus operators are stored factored: a list of stages, each a list of
/// operators, with the full Kraus set being every ordered product
/// `K = K_{1,j_1} K_{2,j_2} ⋯ K_{r,j_r}`. A single stage is the ordinary
/// Kraus form. Group averages over direct products stay linear in the number
/// of factors this way instead of multiplicative.
///
/// In the observable (Heisenberg) picture the map is `B ↦ Σ K* B K`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    stages: Vec<Vec<Operator>>,
}

impl KrausChannel {
    pub fn new(dim: usize, kraus_ops: Vec<Operator>) -> Result<Self> {
        Self::from_stages(dim, vec![kraus_ops])
    }

    pub fn from_stages(dim: usize, stages: Vec<Vec<Operator>>) -> Result<Self> {
        for stage in &stages {
            if stage.is_empty() {
                return Err(Error::InvalidAlgebra("empty Kraus stage".into()));
            }
            if let Some(k) = stage.iter().find(|k| k.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.dim(),
                });
            }
        }
        Ok(KrausChannel { dim, stages })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim,
            stages: vec![vec![Operator::identity(dim)]],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stages(&self) -> &[Vec<Operator>] {
        &self.stages
    }

    /// Size of the expanded Kraus set.
    pub fn kraus_count(&self) -> usize {
        self.stages.iter().map(Vec::len).product()
    }

    /// The expanded Kraus set, products ordered lexicographically by stage.
    pub fn kraus_ops(&self) -> Vec<Operator> {
        let mut acc = vec![Operator::identity(self.dim)];
        for stage in &self.stages {
            acc = acc
                .iter()
                .flat_map(|a| stage.iter().map(move |k| a * k))
                .collect();
        }
        acc
    }

    /// Channel whose Kraus operators are `K · op` for every `K` of `self`,
    /// i.e. `B ↦ op* Φ(B) op`.
    pub fn then_conjugate(&self, op: &Operator) -> Result<Self> {
        let mut stages = self.stages.clone();
        stages.push(vec![op.clone()]);
        Self::from_stages(self.dim, stages)
    }

    /// Observable picture: `B ↦ Σ K* B K`.
    pub fn apply(&self, b: &Operator) -> Operator {
        let mut cur = b.clone();
        for stage in &self.stages {
            cur = conj_sum(stage, &cur, true);
        }
        cur
    }

    /// State picture: `ρ ↦ Σ K ρ K*`.
    pub fn apply_dual(&self, rho: &Operator) -> Operator {
        let mut cur = rho.clone();
        for stage in self.stages.iter().rev() {
            cur = conj_sum(stage, &cur, false);
        }
        cur
    }

    /// `Σ K* K`, the effect of the channel.
    pub fn effect(&self) -> Operator {
        self.apply(&Operator::identity(self.dim))
    }

    /// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of the observable-picture map.
    pub fn choi(&self) -> Operator {
        let d = self.dim;
        let mut out = Operator::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                let img = self.apply(&Operator::unit(d, i, j));
                for a in 0..d {
                    for b in 0..d {
                        out.set(i * d + a, j * d + b, img.get(a, b));
                    }
                }
            }
        }
        out
    }
}

fn conj_sum(stage: &[Operator], b: &Operator, heisenberg: bool) -> Operator {
    let mut out = Operator::zeros(b.dim());
    for k in stage {
        out += &if heisenberg {
            b.conj_by(k)
        } else {
            &(k * b) * &k.adjoint()
        };
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausWire {
    kraus: Vec<Operator>,
}

impl Serialize for KrausChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KrausWire {
            kraus: self.kraus_ops(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = KrausWire::deserialize(d)?;
        let dim = w.kraus.first().map_or(0, Operator::dim);
        KrausChannel::new(dim, w.kraus).map_err(serde::de::Error::custom)
    }
}

/// `ω_n^k` with `ω_n = e^{2πi/n}`.
fn root_of_unity(n: usize, k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * ((k % n) as f64) / n as f64)
}

/// Weyl operator `W(g)|a⟩ = ω_n^{g1·a} |a + g2⟩`.
pub fn weyl_operator(n: usize, g: (usize, usize)) -> Result<Operator> {
    let (g1, g2) = g;
    if n == 0 || g1 >= n || g2 >= n {
        return Err(Error::OutOfRange { n, g1, g2 });
    }
    let mut w = Operator::zeros(n);
    for a in 0..n {
        w.set((a + g2) % n, a, root_of_unity(n, g1 * a));
    }
    Ok(w)
}

/// The finite group `(⊕_i Z_{n_i} × Z_{n_i}) × Z_c` represented inside an
/// algebra with `c` blocks: Weyl operators in each block plus the central
/// unitaries `⊕_i ω_c^{i k} I`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylGroup {
    spec: AlgebraSpec,
}

/// One group element: a Weyl label per block and a central character.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeylElement {
    pub blocks: Vec<(usize, usize)>,
    pub central: usize,
}

impl WeylGroup {
    pub fn new(spec: &AlgebraSpec) -> Self {
        WeylGroup { spec: spec.clone() }
    }

    pub fn order(&self) -> usize {
        self.spec.num_blocks() * self.spec.blocks().iter().map(|b| b.n * b.n).product::<usize>()
    }

    /// All elements in sorted label order.
    pub fn elements(&self) -> Vec<WeylElement> {
        let mut labels: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for b in self.spec.blocks() {
            labels = labels
                .into_iter()
                .flat_map(|prefix| {
                    (0..b.n).flat_map(move |g1| {
                        let prefix = prefix.clone();
                        (0..b.n).map(move |g2| {
                            let mut p = prefix.clone();
                            p.push((g1, g2));
                            p
                        })
                    })
                })
                .collect();
        }
        let c = self.spec.num_blocks();
        labels
            .into_iter()
            .flat_map(|blocks| {
                (0..c).map(move |central| WeylElement {
                    blocks: blocks.clone(),
                    central,
                })
            })
            .collect()
    }

    /// Unitary representing `g` (within the algebra).
    pub fn unitary(&self, g: &WeylElement) -> Result<Operator> {
        let c = self.spec.num_blocks();
        let mut out = Operator::zeros(self.spec.total_dim());
        for (i, (&(g1, g2), b)) in g.blocks.iter().zip(self.spec.blocks()).enumerate() {
            let w = weyl_operator(b.n, (g1, g2))?.scale_c(root_of_unity(c, i * g.central));
            out += &self.spec.embed(i, &w)?;
        }
        Ok(out)
    }

    /// Block-`i` Weyl operator extended by the identity on the other blocks.
    fn block_unitary(&self, i: usize, g: (usize, usize)) -> Result<Operator> {
        let w = weyl_operator(self.spec.blocks()[i].n, g)?;
        let mut out = self.spec.embed(i, &w)?;
        for j in (0..self.spec.num_blocks()).filter(|&j| j != i) {
            out += &self.spec.central_projection(j);
        }
        Ok(out)
    }

    fn central_unitary(&self, k: usize) -> Operator {
        let c = self.spec.num_blocks();
        let mut out = Operator::zeros(self.spec.total_dim());
        for i in 0..c {
            out += &self.spec.central_projection(i).scale_c(root_of_unity(c, i * k));
        }
        out
    }
}

/// The CP projection `Φ(B) = |G|⁻¹ Σ_g W(g)* B W(g)` onto `spec.commutant()`.
///
/// The Kraus set is `{|G|^{-1/2} W(g)}`; it is stored factored by block, with
/// one stage of `n_i²` Weyl operators per block and a final stage of `c`
/// central unitaries.
pub fn twirl_projection(spec: &AlgebraSpec) -> KrausChannel {
    let group = WeylGroup::new(spec);
    let d = spec.total_dim();
    let mut stages = Vec::new();
    for (i, b) in spec.blocks().iter().enumerate() {
        if b.n == 1 {
            continue;
        }
        let s = 1.0 / b.n as f64;
        let stage = (0..b.n)
            .flat_map(|g1| (0..b.n).map(move |g2| (g1, g2)))
            .map(|g| {
                group
                    .block_unitary(i, g)
                    .expect("labels are in range")
                    .scale(s)
            })
            .collect();
        stages.push(stage);
    }
    let c = spec.num_blocks();
    if c > 1 {
        let s = 1.0 / (c as f64).sqrt();
        stages.push((0..c).map(|k| group.central_unitary(k).scale(s)).collect());
    }
    if stages.is_empty() {
        return KrausChannel::identity(d);
    }
    KrausChannel::from_stages(d, stages).expect("stages are well formed")
}

/// Spectral projections of a Hermitian `t`, eigenvalues closer than
/// `gap_tol` to their neighbour merged into one cluster. Each entry carries
/// the cluster's mean eigenvalue.
pub fn spectral_projections(t: &Operator, gap_tol: f64) -> Result<Vec<(f64, Operator)>> {
    if !t.is_hermitian() {
        return Err(Error::NotHermitian {
            defect: t.hermiticity_defect(),
        });
    }
    let eig = t.eigh();
    let d = t.dim();
    let mut out: Vec<(Vec<f64>, Operator)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (lam, v) in eig.values.iter().zip(&eig.vectors) {
        let proj = Operator::outer(v);
        match out.last_mut() {
            Some((vals, q)) if lam - prev <= gap_tol => {
                vals.push(*lam);
                *q += &proj;
            }
            _ => out.push((vec![*lam], proj)),
        }
        prev = *lam;
    }
    debug_assert!(out.iter().map(|(_, q)| q.dim()).all(|k| k == d));
    Ok(out
        .into_iter()
        .map(|(vals, q)| (vals.iter().sum::<f64>() / vals.len() as f64, q))
        .collect())
}

/// Lüders pinching `B ↦ Σ_k Q_k B Q_k` over the spectral projections of `t`.
pub fn pinching(t: &Operator, gap_tol: f64) -> Result<KrausChannel> {
    let projections = spectral_projections(t, gap_tol)?;
    KrausChannel::new(t.dim(), projections.into_iter().map(|(_, q)| q).collect())
}

/// Expanded twirl, summing over every group element explicitly. Quadratic in
/// the group order; meant for cross-checks on small algebras.
pub fn twirl_brute_force(spec: &AlgebraSpec, b: &Operator) -> Result<Operator> {
    let group = WeylGroup::new(spec);
    let mut out = Operator::zeros(spec.total_dim());
    let elements = group.elements();
    for g in &elements {
        out += &b.conj_by(&group.unitary(g)?);
    }
    Ok(out.scale(1.0 / elements.len() as f64))
}
