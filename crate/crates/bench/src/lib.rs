//! Shared fixtures for the criterion benches.

use steerlab_core::random::{case_rng, random_operator, steering_instance};
use steerlab_core::{AlgebraSpec, Ensemble, Layout, Operator, VectorState};

/// Named algebras of increasing size, up to total dimension 16.
pub fn specs() -> Vec<(&'static str, AlgebraSpec)> {
    let mk = |b: &[(usize, usize)], l| AlgebraSpec::new(b, l).expect("valid blocks");
    vec![
        ("qubit-pair", AlgebraSpec::tensor_right(2, 2)),
        ("abelian-4", AlgebraSpec::diagonal(4)),
        ("mixed-9", mk(&[(2, 2), (1, 1), (2, 2)], Layout::AlgebraMajor)),
        ("three-block-12", mk(&[(3, 2), (2, 1), (1, 4)], Layout::MultiplicityMajor)),
        ("qutrit-pair-9", AlgebraSpec::tensor_right(3, 3)),
        ("ququart-pair-16", AlgebraSpec::tensor_right(4, 4)),
    ]
}

pub struct SteeringFixture {
    pub spec: AlgebraSpec,
    pub x: VectorState,
    pub mu: Ensemble,
}

/// Random vector on `spec` and a `k`-way split of the state it induces.
pub fn steering_fixture(spec: &AlgebraSpec, k: usize, seed: u64) -> SteeringFixture {
    let mut rng = case_rng(seed, 0);
    let (x, mu) = steering_instance(&mut rng, spec, k).expect("fixture instance");
    SteeringFixture {
        spec: spec.clone(),
        x,
        mu,
    }
}

pub fn operator(dim: usize, seed: u64) -> Operator {
    random_operator(&mut case_rng(seed, 1), dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use steerlab_core::build_steering_povm;

    #[test]
    fn fixtures_are_solvable() {
        for (name, spec) in specs() {
            assert!(spec.total_dim() <= 16, "{name}");
            let f = steering_fixture(&spec, 4, 1);
            build_steering_povm(&f.x, &f.spec, &f.mu).unwrap();
        }
    }
}
