//! Random instances for property checks, benches and the invariant suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraSpec, Layout};
use crate::error::Result;
use crate::linalg::{Operator, C64};
use crate::state::{Component, Ensemble, SubState, VectorState};
use crate::tol;

/// Generator for case `index` of a run seeded with `seed`.
pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> VectorState {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(x) = VectorState::normalized(v) {
            return x;
        }
    }
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn random_operator<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    Operator::from_fn(dim, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    random_operator(rng, dim).hermitian_part()
}

/// `G G* + ε I`, strictly positive.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let g = random_operator(rng, dim);
    &g * &g.adjoint() + Operator::identity(dim).scale(0.05)
}

/// Random density matrix of full rank.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let p = random_positive(rng, dim);
    let t = p.trace().re;
    p.scale(1.0 / t)
}

/// Random element `⊕ X_i ⊗ I` of the algebra.
pub fn random_algebra_element<R: Rng + ?Sized>(rng: &mut R, spec: &AlgebraSpec) -> Operator {
    let xs: Vec<Operator> = spec.blocks().iter().map(|b| random_operator(rng, b.n)).collect();
    spec.embed_blocks(&xs).expect("blocks match spec")
}

pub fn random_commutant_element<R: Rng + ?Sized>(rng: &mut R, spec: &AlgebraSpec) -> Operator {
    random_algebra_element(rng, &spec.commutant())
}

/// Random block structure with total dimension at most `max_dim`: up to three
/// blocks, `n ≤ 3`, `m ≤ 4`, either layout.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, max_dim: usize) -> AlgebraSpec {
    loop {
        let k = rng.random_range(1..=3);
        let blocks: Vec<(usize, usize)> = (0..k)
            .map(|_| (rng.random_range(1..=3), rng.random_range(1..=4)))
            .collect();
        let d: usize = blocks.iter().map(|(n, m)| n * m).sum();
        if d > max_dim {
            continue;
        }
        let layout = if rng.random::<bool>() {
            Layout::AlgebraMajor
        } else {
            Layout::MultiplicityMajor
        };
        return AlgebraSpec::new(&blocks, layout).expect("positive dims");
    }
}

/// Hand-picked shapes that stress the block bookkeeping.
pub fn edge_case_specs() -> Vec<AlgebraSpec> {
    let mm = Layout::MultiplicityMajor;
    let am = Layout::AlgebraMajor;
    [
        (vec![(1, 1)], am),
        (vec![(1, 4)], am),
        (vec![(1, 3)], mm),
        (vec![(4, 1)], am),
        (vec![(1, 1); 4], am),
        (vec![(1, 1); 3], mm),
        (vec![(2, 2)], am),
        (vec![(2, 2)], mm),
        (vec![(3, 2), (2, 1), (1, 4)], am),
        (vec![(3, 2), (2, 1), (1, 4)], mm),
        (vec![(2, 1), (2, 1)], am),
        (vec![(1, 2), (2, 1)], mm),
    ]
    .into_iter()
    .map(|(b, l)| AlgebraSpec::new(&b, l).expect("valid"))
    .collect()
}

/// Edge cases first, then random shapes.
pub fn spec_for_case<R: Rng + ?Sized>(rng: &mut R, index: usize, max_dim: usize) -> AlgebraSpec {
    let edges: Vec<AlgebraSpec> = edge_case_specs()
        .into_iter()
        .filter(|s| s.total_dim() <= max_dim)
        .collect();
    match edges.get(index) {
        Some(s) => s.clone(),
        None => random_spec(rng, max_dim),
    }
}

/// Splits `rho` into `k` components whose weighted average is `rho`.
///
/// With random positive `Q_j` in the algebra and `S = Σ Q_j`, the parts are
/// `T_j = ρ^{1/2} S^{-1/2} Q_j S^{-1/2} ρ^{1/2}` blockwise, so `Σ T_j = ρ`
/// holds up to rounding. Labels are `"0"`, `"1"`, ….
pub fn split_state<R: Rng + ?Sized>(rng: &mut R, rho: &SubState, k: usize) -> Result<Ensemble> {
    let spec = rho.algebra().clone();
    let sigmas = rho.blocks();
    let qs: Vec<Vec<Operator>> = (0..k)
        .map(|_| spec.blocks().iter().map(|b| random_positive(rng, b.n)).collect())
        .collect();
    let mut parts: Vec<Vec<Operator>> = vec![Vec::new(); k];
    for (i, sigma) in sigmas.iter().enumerate() {
        let mut s = Operator::zeros(sigma.dim());
        for q in &qs {
            s += &q[i];
        }
        let s_inv = s.inv_sqrt_psd(0.0);
        // Rounding noise on a rank-deficient σ would turn into √ε after the root.
        let top = sigma.eigh().values.last().copied().unwrap_or(0.0);
        let root = sigma.spectral_map(|l| if l > tol::NORM * top { l.sqrt() } else { 0.0 });
        for (j, q) in qs.iter().enumerate() {
            let mid = &(&s_inv * &q[i]) * &s_inv;
            parts[j].push((&(&root * &mid) * &root).hermitian_part());
        }
    }
    let components = parts
        .into_iter()
        .enumerate()
        .map(|(j, blocks)| {
            let weight: f64 = blocks.iter().map(|t| t.trace().re).sum();
            let normalized: Vec<Operator> = blocks.iter().map(|t| t.scale(1.0 / weight)).collect();
            Ok(Component {
                label: j.to_string(),
                weight,
                state: SubState::from_blocks(&spec, &normalized)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    renormalize(&spec, components)
}

/// Rescales weights to sum to exactly one; their drift is rounding only.
fn renormalize(spec: &AlgebraSpec, mut components: Vec<Component>) -> Result<Ensemble> {
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in &mut components {
        c.weight /= total;
    }
    Ensemble::new(spec, components)
}

/// A random steering instance on `spec`: a Haar-random vector and a
/// `k`-way split of the state it induces.
pub fn steering_instance<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &AlgebraSpec,
    k: usize,
) -> Result<(VectorState, Ensemble)> {
    let x = random_vector(rng, spec.total_dim());
    let rho = x.restrict(spec)?;
    let mu = split_state(rng, &rho, k)?;
    Ok((x, mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::barycenter;

    #[test]
    fn split_preserves_barycenter() {
        let mut rng = case_rng(5, 0);
        for spec in edge_case_specs() {
            let (x, mu) = steering_instance(&mut rng, &spec, 4).unwrap();
            let bary = barycenter(&mu);
            let rho = x.restrict(&spec).unwrap();
            assert!((bary.density() - rho.density()).max_abs() < 1e-12);
            assert!(mu.components().iter().all(|c| c.weight > 0.0));
            let total: f64 = mu.components().iter().map(|c| c.weight).sum();
            assert!((total - 1.0).abs() <= tol::NORM);
        }
    }

    #[test]
    fn random_spec_respects_bound() {
        let mut rng = case_rng(1, 2);
        for _ in 0..200 {
            let s = random_spec(&mut rng, 16);
            assert!(s.total_dim() <= 16);
            assert!(s.blocks().iter().all(|b| b.n <= 3 && b.m <= 4));
        }
    }

    #[test]
    fn algebra_elements_are_members() {
        let mut rng = case_rng(9, 0);
        for spec in edge_case_specs() {
            let a = random_algebra_element(&mut rng, &spec);
            assert!(spec.membership_residual(&a).unwrap() < 1e-12);
            let c = random_commutant_element(&mut rng, &spec);
            assert!((&a * &c - &c * &a).max_abs() < 1e-10);
        }
    }

    #[test]
    fn case_streams_are_independent_and_reproducible() {
        let a: f64 = case_rng(3, 0).random();
        let b: f64 = case_rng(3, 1).random();
        let c: f64 = case_rng(3, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
