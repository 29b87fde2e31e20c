//! Bit commitment on a truncated spin lattice.
//!
//! Alice commits to `b` by preparing, at each of `N` sites, a pair of qubits
//! in the state `|b,s_i⟩ ⊗ |b,s_i⟩` for a secret string `s`, where `|0,·⟩` are
//! the `σ_x` eigenvectors and `|1,·⟩` the `σ_y` eigenvectors. Bob keeps the
//! second qubit of every pair. To unveil she announces the Cantor value of
//! `s`; Bob measures `A_b = Σ_i (2/3^i) P_b^{(i)}` and accepts if his value
//! matches.
//!
//! Each pair is held as a 4×4 density on `Alice ⊗ Bob`; the joint state is
//! never materialized beyond the dense limit. Site 1 is the most significant
//! tensor factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::AlgebraSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, pauli, Operator, C64, I, ONE, ZERO};
use crate::state::{partial_trace, trace_distance, Ensemble, Side, SubState, VectorState};
use crate::steering::build_steering_povm;
use crate::twirl::{pinching, spectral_projections};

/// Largest lattice for the factorized simulation and for dense `A_b`.
pub const MAX_SITES: usize = 10;
/// Largest lattice for full-density checks.
pub const DENSE_SITES: usize = 5;

pub type Bits = Vec<u8>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Honest,
    Cheat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub sites: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Ignored in cheat mode.
    #[serde(default)]
    pub committed_bit: u8,
    pub unveiled_bit: u8,
    /// Keep one record per trial in the report.
    #[serde(default)]
    pub record_trials: bool,
    /// Also compute concealment from full `2^N × 2^N` densities.
    #[serde(default)]
    pub dense: bool,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::InvalidConfig("sites must be positive".into()));
        }
        if self.sites > MAX_SITES {
            return Err(Error::TooLarge {
                sites: self.sites,
                limit: MAX_SITES,
            });
        }
        if self.dense && self.sites > DENSE_SITES {
            return Err(Error::TooLarge {
                sites: self.sites,
                limit: DENSE_SITES,
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        for (name, bit) in [("committed_bit", self.committed_bit), ("unveiled_bit", self.unveiled_bit)] {
            if bit > 1 {
                return Err(Error::InvalidConfig(format!("{name} must be 0 or 1, got {bit}")));
            }
        }
        Ok(())
    }
}

fn check_bit(b: u8) -> Result<()> {
    if b > 1 {
        return Err(Error::InvalidConfig(format!("bit must be 0 or 1, got {b}")));
    }
    Ok(())
}

fn check_sites(n: usize, limit: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("sites must be positive".into()));
    }
    if n > limit {
        return Err(Error::TooLarge { sites: n, limit });
    }
    Ok(())
}

/// `σ_x` for `b = 0`, `σ_y` for `b = 1`.
pub fn site_observable(b: u8) -> Operator {
    if b == 0 {
        pauli::x()
    } else {
        pauli::y()
    }
}

/// `|b,s⟩`: the eigenvector of `σ_b` with eigenvalue `(−1)^s`.
pub fn site_vector(b: u8, s: u8) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if s == 0 { 1.0 } else { -1.0 };
    let second = if b == 0 { ONE * sign } else { I * sign };
    [ONE * h, second * h]
}

/// `|b,s⟩⟨b,s| = ½(I + (−1)^s σ_b)`, with exact entries.
pub fn site_projector(b: u8, s: u8) -> Operator {
    let sign = if s == 0 { 0.5 } else { -0.5 };
    Operator::identity(2).scale(0.5) + site_observable(b).scale(sign)
}

/// `|b,s⟩ = ⊗_i |b,s_i⟩`.
pub fn basis_vector(b: u8, s: &[u8]) -> Vec<C64> {
    s.iter()
        .fold(vec![ONE], |acc, &si| linalg::kron_vec(&acc, &site_vector(b, si)))
}

/// `I ⊗ ⋯ ⊗ op ⊗ ⋯ ⊗ I` with `op` at 0-based site `i` of `n`.
pub fn embed_site(op: &Operator, i: usize, n: usize) -> Operator {
    let left = Operator::identity(1 << i);
    let right = Operator::identity(1 << (n - i - 1));
    left.kron(op).kron(&right)
}

/// Dense `A_b = Σ_{i=1}^N (2/3^i) P_b^{(i)}`, `P_b = ½(I + σ_b)`.
pub fn unveil_observable(b: u8, n: usize) -> Result<Operator> {
    check_bit(b)?;
    check_sites(n, MAX_SITES)?;
    let p = site_projector(b, 0);
    let mut out = Operator::zeros(1 << n);
    for i in 0..n {
        out += &embed_site(&p, i, n).scale(cantor_weight(i));
    }
    Ok(out)
}

/// `2/3^{i+1}` for 0-based site `i`.
fn cantor_weight(i: usize) -> f64 {
    2.0 / 3f64.powi(i as i32 + 1)
}

/// `Σ_i (2/3^i)(1 − s_i)`: the eigenvalue of `A_b` on `|b,s⟩`.
pub fn cantor_value(s: &[u8]) -> f64 {
    s.iter()
        .enumerate()
        .map(|(i, &si)| cantor_weight(i) * f64::from(1 - si))
        .sum()
}

/// The guaranteed separation `3^{-N}` between distinct Cantor values.
pub fn cantor_gap(n: usize) -> f64 {
    3f64.powi(-(n as i32))
}

/// All `2^N` strings in lexicographic order, site 1 first.
pub fn all_strings(n: usize) -> Vec<Bits> {
    (0..1usize << n)
        .map(|k| (0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect())
        .collect()
}

/// Smallest distance between the Cantor values of distinct strings.
pub fn min_cantor_separation(n: usize) -> f64 {
    let mut v: Vec<f64> = all_strings(n).iter().map(|s| cantor_value(s)).collect();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Per-pair densities on `Alice ⊗ Bob`.
#[derive(Clone, Debug, PartialEq)]
pub struct Commitment {
    pairs: Vec<Operator>,
}

impl Commitment {
    pub fn sites(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[Operator] {
        &self.pairs
    }

    /// Bob's reduced state at each site.
    pub fn bob_marginals(&self) -> Vec<Operator> {
        self.pairs
            .iter()
            .map(|p| partial_trace(p, (2, 2), Side::First).expect("pairs are 4x4"))
            .collect()
    }

    /// Schmidt rank across the Alice|Bob cut. Every pair is pure, so this is
    /// the product of the ranks of Bob's site marginals.
    pub fn schmidt_rank(&self) -> usize {
        self.bob_marginals()
            .iter()
            .map(|m| m.eigh().values.iter().filter(|&&v| v > 1e-9).count())
            .product()
    }

    /// Full joint density, dimension `4^N`, factors ordered `A_1…A_N B_1…B_N`.
    pub fn to_dense(&self) -> Result<Operator> {
        check_sites(self.sites(), DENSE_SITES)?;
        let n = self.sites();
        let pair_vectors: Vec<Vec<C64>> = self.pairs.iter().map(pure_vector).collect();
        let d = 1usize << n;
        let mut x = vec![ZERO; d * d];
        for (ia, ib) in (0..d).flat_map(|a| (0..d).map(move |b| (a, b))) {
            let mut amp = ONE;
            for (i, v) in pair_vectors.iter().enumerate() {
                let a = (ia >> (n - 1 - i)) & 1;
                let b = (ib >> (n - 1 - i)) & 1;
                amp *= v[2 * a + b];
            }
            x[ia * d + ib] = amp;
        }
        Ok(Operator::outer(&x))
    }
}

/// A unit vector with `|v⟩⟨v| = rho` for a rank-one density.
fn pure_vector(rho: &Operator) -> Vec<C64> {
    let eig = rho.eigh();
    let top = eig.values.len() - 1;
    eig.vectors[top]
        .iter()
        .map(|z| z * eig.values[top].max(0.0).sqrt())
        .collect()
}

/// Honest commit to `b`: a uniformly random secret and the product pairs
/// `|b,s_i⟩⟨b,s_i| ⊗ |b,s_i⟩⟨b,s_i|`.
pub fn honest_commit<R: Rng>(b: u8, n: usize, rng: &mut R) -> Result<(Bits, Commitment)> {
    check_bit(b)?;
    check_sites(n, MAX_SITES)?;
    let s: Bits = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
    let pairs = s
        .iter()
        .map(|&si| {
            let p = site_projector(b, si);
            p.kron(&p)
        })
        .collect();
    Ok((s, Commitment { pairs }))
}

/// `|Φ+⟩⟨Φ+|` on one pair, `Φ+ = (|00⟩ + |11⟩)/√2`, with exact entries.
pub fn phi_plus_pair() -> Operator {
    Operator::outer(&[ONE, ZERO, ZERO, ONE]).scale(0.5)
}

/// The cheating commit: a maximally entangled pair at every site.
pub fn cheat_commit(n: usize) -> Result<Commitment> {
    check_sites(n, MAX_SITES)?;
    Ok(Commitment {
        pairs: vec![phi_plus_pair(); n],
    })
}

/// One unveil attempt.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnveilRecord {
    /// Alice's secret (honest) or her measured string (cheat).
    #[serde(serialize_with = "bits_str")]
    pub s_alice: Bits,
    /// The string whose Cantor value Alice announces.
    #[serde(serialize_with = "bits_str")]
    pub report: Bits,
    /// Bob's measured string.
    #[serde(serialize_with = "bits_str")]
    pub s_bob: Bits,
    pub alice_value: f64,
    pub bob_value: f64,
    pub accepted: bool,
}

impl UnveilRecord {
    fn new(s_alice: Bits, report: Bits, s_bob: Bits) -> Self {
        UnveilRecord {
            alice_value: cantor_value(&report),
            bob_value: cantor_value(&s_bob),
            accepted: report == s_bob,
            s_alice,
            report,
            s_bob,
        }
    }
}

pub fn bits_to_string(s: &[u8]) -> String {
    s.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

fn bits_str<S: Serializer>(s: &[u8], ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&bits_to_string(s))
}

/// Bob measures `A_b` site by site on his marginals.
fn bob_measure<R: Rng>(marginals: &[Operator], b: u8, rng: &mut R) -> Bits {
    let p0 = site_projector(b, 0);
    marginals
        .iter()
        .map(|rho| {
            let p = (&p0 * rho).trace().re.clamp(0.0, 1.0);
            u8::from(rng.random::<f64>() >= p)
        })
        .collect()
}

/// Honest unveil of `b_unveil`: Alice announces her secret, Bob measures.
pub fn honest_unveil<R: Rng>(
    c: &Commitment,
    secret: &[u8],
    b_unveil: u8,
    rng: &mut R,
) -> Result<UnveilRecord> {
    check_bit(b_unveil)?;
    if secret.len() != c.sites() {
        return Err(Error::DimensionMismatch {
            expected: c.sites(),
            found: secret.len(),
        });
    }
    let s_bob = bob_measure(&c.bob_marginals(), b_unveil, rng);
    Ok(UnveilRecord::new(secret.to_vec(), secret.to_vec(), s_bob))
}

/// Alice's per-site measurement for unveiling `b`: the pinching of
/// `P_b = ½(I + σ_b)`, each Kraus projection tagged with the string bit it
/// certifies (`s = 0` for eigenvalue 1).
pub fn alice_pinching(b: u8) -> Result<Vec<(u8, Operator)>> {
    check_bit(b)?;
    let p = site_projector(b, 0);
    let channel = pinching(&p, default_gap_tol(1))?;
    let tagged = spectral_projections(&p, default_gap_tol(1))?;
    debug_assert_eq!(channel.kraus_count(), tagged.len());
    Ok(tagged
        .into_iter()
        .map(|(lam, q)| (u8::from(lam < 0.5), q))
        .collect())
}

/// Eigenvalue clustering resolution for `A_b` at `n` sites.
pub fn default_gap_tol(n: usize) -> f64 {
    cantor_gap(n) / 10.0
}

/// The cheat: Alice pinches her half of each pair in the `b_unveil` basis,
/// which collapses Bob's qubit to the complex conjugate of her outcome. She
/// announces her own string for `b_unveil = 0` and its complement for
/// `b_unveil = 1`, since conjugation swaps the two `σ_y` eigenvectors.
pub fn cheat_unveil<R: Rng>(c: &Commitment, b_unveil: u8, rng: &mut R) -> Result<UnveilRecord> {
    let kraus = alice_pinching(b_unveil)?;
    let id = Operator::identity(2);
    let mut s_alice = Vec::with_capacity(c.sites());
    let mut collapsed = Vec::with_capacity(c.sites());
    for pair in c.pairs() {
        let branches: Vec<(u8, f64, Operator)> = kraus
            .iter()
            .map(|(s, q)| {
                let k = q.kron(&id);
                let post = &(&k * pair) * &k;
                let p = post.trace().re.max(0.0);
                (*s, p, post)
            })
            .collect();
        let total: f64 = branches.iter().map(|b| b.1).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = branches.len() - 1;
        for (k, b) in branches.iter().enumerate() {
            if u < b.1 {
                pick = k;
                break;
            }
            u -= b.1;
        }
        let (s, p, post) = &branches[pick];
        s_alice.push(*s);
        collapsed.push(partial_trace(&post.scale(1.0 / p), (2, 2), Side::First)?);
    }
    let report: Bits = s_alice.iter().map(|&s| s ^ b_unveil).collect();
    let s_bob = bob_measure(&collapsed, b_unveil, rng);
    Ok(UnveilRecord::new(s_alice, report, s_bob))
}

/// Bob's site marginal averaged over the honest secret: `½ Σ_s |b,s⟩⟨b,s|`.
pub fn honest_site_mixture(b: u8) -> Operator {
    (site_projector(b, 0) + site_projector(b, 1)).scale(0.5)
}

/// Bob's marginal for an honest commit to `b`, one factor per site.
pub fn factorized_honest_marginal(b: u8, n: usize) -> Result<Vec<Operator>> {
    check_bit(b)?;
    check_sites(n, MAX_SITES)?;
    Ok(vec![honest_site_mixture(b); n])
}

/// Bob's marginal for the cheating commit, one factor per site.
pub fn factorized_cheat_marginal(n: usize) -> Result<Vec<Operator>> {
    Ok(cheat_commit(n)?.bob_marginals())
}

/// Trace distance between two product states given by their factors.
///
/// Identical factors give exactly 0. Otherwise the returned value is
/// `Σ_i T(ρ_i, σ_i)`, an upper bound on the distance of the products.
pub fn factorized_trace_distance(a: &[Operator], b: &[Operator]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a == b {
        return Ok(0.0);
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| trace_distance(x, y))
        .sum()
}

/// Dense `ρ_b = 2^{-N} Σ_s |b,s⟩⟨b,s|`.
pub fn dense_honest_marginal(b: u8, n: usize) -> Result<Operator> {
    check_bit(b)?;
    check_sites(n, DENSE_SITES)?;
    let mut out = Operator::zeros(1 << n);
    for s in all_strings(n) {
        out += &Operator::outer(&basis_vector(b, &s));
    }
    Ok(out.scale(1.0 / (1usize << n) as f64))
}

/// Bob's marginal of the full cheating joint state, by dense partial trace.
pub fn dense_cheat_marginal(n: usize) -> Result<Operator> {
    check_sites(n, DENSE_SITES)?;
    let joint = cheat_commit(n)?.to_dense()?;
    let d = 1usize << n;
    partial_trace(&joint, (d, d), Side::First)
}

/// `‖2^{-N} Σ_s |b,s⟩⟨b,s| − I/2^N‖`.
pub fn uniform_barycenter_check(b: u8, n: usize) -> Result<f64> {
    let rho = dense_honest_marginal(b, n)?;
    let d = 1usize << n;
    Ok((rho - Operator::identity(d).scale(1.0 / d as f64)).norm())
}

/// Steering check at one site: the POVM that steers `Φ+` into the uniform
/// ensemble over `|b,s⟩` must be Alice's pinching projector for outcome
/// `s ⊕ b`, tensored with Bob's identity. Returns the largest deviation.
pub fn steering_consistency(b: u8) -> Result<f64> {
    check_bit(b)?;
    let spec = AlgebraSpec::tensor_right(2, 2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = VectorState::new(vec![ONE * h, ZERO, ZERO, ONE * h])?;
    let parts = (0..2u8)
        .map(|s| Ok((0.5, SubState::from_blocks(&spec, &[site_projector(b, s)])?)))
        .collect::<Result<Vec<_>>>()?;
    let mu = Ensemble::from_weighted(&spec, parts)?;
    let povm = build_steering_povm(&x, &spec, &mu)?;
    let kraus = alice_pinching(b)?;
    let id = Operator::identity(2);
    let mut worst: f64 = 0.0;
    for (s, label) in ["0", "1"].iter().enumerate() {
        let a = povm
            .element(label)
            .ok_or_else(|| Error::LabelMismatch(format!("no element {label}")))?;
        let want = (s as u8) ^ b;
        let (_, q) = kraus
            .iter()
            .find(|(t, _)| *t == want)
            .ok_or_else(|| Error::LabelMismatch(format!("no projector for {want}")))?;
        worst = worst.max((a - q.kron(&id)).max_abs());
    }
    Ok(worst)
}

/// Deterministic generator for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Acceptance probability predicted for a configuration.
pub fn analytic_acceptance(cfg: &ProtocolConfig) -> f64 {
    match cfg.mode {
        Mode::Cheat => 1.0,
        Mode::Honest if cfg.committed_bit == cfg.unveiled_bit => 1.0,
        Mode::Honest => 0.5f64.powi(cfg.sites as i32),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: ProtocolConfig,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub expected_acceptance: f64,
    /// Binomial standard deviation of the rate at the expected acceptance.
    pub standard_error: f64,
    /// Concealment: distance between Bob's marginals for `b = 0` and `b = 1`.
    pub trace_distance_rho0_rho1: f64,
    /// Dense cross-check of the same distance, when requested.
    pub dense_trace_distance: Option<f64>,
    /// Distance between the cheating marginal and the honest one.
    pub cheat_marginal_distance: Option<f64>,
    pub cantor_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<UnveilRecord>>,
}

/// Runs `cfg.trials` independent commit/unveil rounds.
pub fn simulate(cfg: &ProtocolConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let n = cfg.sites;
    let b_unveil = cfg.unveiled_bit;
    let cheat = match cfg.mode {
        Mode::Cheat => Some(cheat_commit(n)?),
        Mode::Honest => None,
    };
    let mut records = Vec::with_capacity(if cfg.record_trials { cfg.trials } else { 0 });
    let mut accepted = 0usize;
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let rec = match &cheat {
            Some(c) => cheat_unveil(c, b_unveil, &mut rng)?,
            None => {
                let (s, c) = honest_commit(cfg.committed_bit, n, &mut rng)?;
                honest_unveil(&c, &s, b_unveil, &mut rng)?
            }
        };
        accepted += usize::from(rec.accepted);
        if cfg.record_trials {
            records.push(rec);
        }
    }

    let rho0 = factorized_honest_marginal(0, n)?;
    let rho1 = factorized_honest_marginal(1, n)?;
    let distance = factorized_trace_distance(&rho0, &rho1)?;
    let dense_distance = if cfg.dense {
        Some(trace_distance(
            &dense_honest_marginal(0, n)?,
            &dense_honest_marginal(1, n)?,
        )?)
    } else {
        None
    };
    let cheat_distance = match &cheat {
        Some(c) => Some(factorized_trace_distance(
            &c.bob_marginals(),
            &factorized_honest_marginal(b_unveil, n)?,
        )?),
        None => None,
    };
    let expected = analytic_acceptance(cfg);
    Ok(SimulationReport {
        config: cfg.clone(),
        accepted,
        acceptance_rate: accepted as f64 / cfg.trials as f64,
        expected_acceptance: expected,
        standard_error: (expected * (1.0 - expected) / cfg.trials as f64).sqrt(),
        trace_distance_rho0_rho1: distance,
        dense_trace_distance: dense_distance,
        cheat_marginal_distance: cheat_distance,
        cantor_gap: cantor_gap(n),
        per_trial: cfg.record_trials.then_some(records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode, b: u8, b2: u8, n: usize, t: usize) -> ProtocolConfig {
        ProtocolConfig {
            sites: n,
            trials: t,
            seed: 7,
            mode,
            committed_bit: b,
            unveiled_bit: b2,
            record_trials: true,
            dense: false,
        }
    }

    #[test]
    fn lattice_basis_is_orthonormal_and_diagonalizes_projectors() {
        for b in 0..2 {
            for s in 0..2 {
                let v = site_vector(b, s);
                for t in 0..2 {
                    let w = site_vector(b, t);
                    let ip = linalg::inner(&v, &w);
                    let want = if s == t { 1.0 } else { 0.0 };
                    assert!((ip - C64::from(want)).norm() < 1e-15);
                }
                let pv = site_projector(b, 0).mul_vec(&v);
                let scale = f64::from(1 - s);
                assert!(pv.iter().zip(&v).all(|(a, c)| (a - c * scale).norm() < 1e-15));
                assert!((site_projector(b, s) - Operator::outer(&v)).max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unveil_observable_spectra() {
        let a = unveil_observable(0, 1).unwrap();
        let ev = a.eigh().values;
        assert!((ev[0]).abs() < 1e-14 && (ev[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((a - (Operator::identity(2) + pauli::x()).scale(1.0 / 3.0)).max_abs() < 1e-15);

        for b in 0..2 {
            let ev = unveil_observable(b, 2).unwrap().eigh().values;
            for (got, want) in ev.iter().zip([0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0]) {
                assert!((got - want).abs() < 1e-14);
            }
        }
        assert!(matches!(unveil_observable(0, 11), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn unveil_observable_eigenvectors() {
        let mut rng = trial_rng(3, 0);
        for n in 1..=5 {
            for b in 0..2 {
                let a = unveil_observable(b, n).unwrap();
                for _ in 0..4 {
                    let s: Bits = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
                    let v = basis_vector(b, &s);
                    let av = a.mul_vec(&v);
                    let lam = cantor_value(&s);
                    assert!(av.iter().zip(&v).all(|(x, y)| (x - y * lam).norm() < 1e-13));
                }
            }
        }
    }

    #[test]
    fn cantor_separation() {
        for n in 1..=8 {
            let gap = min_cantor_separation(n);
            assert!(gap >= cantor_gap(n) - cantor_gap(n) / 10.0);
        }
        assert_eq!(cantor_value(&[0, 0]), 2.0 / 3.0 + 2.0 / 9.0);
    }

    #[test]
    fn honest_marginals_conceal() {
        for b in 0..2 {
            assert_eq!(honest_site_mixture(b), Operator::identity(2).scale(0.5));
        }
        let r0 = dense_honest_marginal(0, 3).unwrap();
        let r1 = dense_honest_marginal(1, 3).unwrap();
        assert!(trace_distance(&r0, &r1).unwrap() <= 1e-12);
        assert_eq!(
            factorized_trace_distance(
                &factorized_honest_marginal(0, 10).unwrap(),
                &factorized_honest_marginal(1, 10).unwrap()
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn honest_commit_is_product() {
        let mut rng = trial_rng(1, 0);
        let (s, c) = honest_commit(1, 4, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(c.schmidt_rank(), 1);
        let dense = c.to_dense().unwrap();
        let bob = partial_trace(&dense, (16, 16), Side::First).unwrap();
        assert!((bob - Operator::outer(&basis_vector(1, &s))).max_abs() < 1e-12);
    }

    #[test]
    fn cheat_commit_structure() {
        let c = cheat_commit(3).unwrap();
        assert_eq!(c.schmidt_rank(), 8);
        for m in c.bob_marginals() {
            assert_eq!(m, Operator::identity(2).scale(0.5));
        }
        let dense = dense_cheat_marginal(3).unwrap();
        for b in 0..2 {
            let honest = dense_honest_marginal(b, 3).unwrap();
            assert!(trace_distance(&dense, &honest).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn honest_unveil_always_accepted() {
        let rep = simulate(&cfg(Mode::Honest, 1, 1, 5, 50)).unwrap();
        assert_eq!(rep.accepted, 50);
        for r in rep.per_trial.unwrap() {
            assert_eq!(r.alice_value, r.bob_value);
        }
    }

    #[test]
    fn cheat_unveil_collapse_conventions() {
        let c = cheat_commit(6).unwrap();
        for b in 0..2u8 {
            for t in 0..20 {
                let mut rng = trial_rng(11, t);
                let r = cheat_unveil(&c, b, &mut rng).unwrap();
                assert!(r.accepted);
                let flipped: Bits = r.s_alice.iter().map(|s| s ^ b).collect();
                assert_eq!(r.s_bob, flipped);
            }
        }
    }

    #[test]
    fn alice_pinching_tags() {
        for b in 0..2 {
            for (s, q) in alice_pinching(b).unwrap() {
                assert!((q - site_projector(b, s)).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_matches_pinching() {
        for b in 0..2 {
            assert!(steering_consistency(b).unwrap() < 1e-9);
        }
    }

    #[test]
    fn barycenter_check_small() {
        assert!(uniform_barycenter_check(0, 1).unwrap() <= 1e-15);
        assert!(uniform_barycenter_check(1, 3).unwrap() <= 1e-12);
    }

    #[test]
    fn simulation_is_reproducible() {
        let c = cfg(Mode::Honest, 0, 1, 3, 40);
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a, b);
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(simulate(&other).unwrap().per_trial, a.per_trial);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Mode::Honest, 0, 0, 11, 1);
        assert!(matches!(c.validate(), Err(Error::TooLarge { .. })));
        c.sites = 6;
        c.dense = true;
        assert!(matches!(c.validate(), Err(Error::TooLarge { limit: 5, .. })));
        c.dense = false;
        c.unveiled_bit = 2;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let json = r#"{"sites":2,"trials":1,"seed":0,"mode":"cheat","unveiled_bit":1}"#;
        let parsed: ProtocolConfig = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.mode, Mode::Cheat);
        assert!(serde_json::from_str::<ProtocolConfig>(r#"{"sites":2,"bogus":1}"#).is_err());
    }
}
