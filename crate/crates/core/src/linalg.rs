//! Dense complex operators and vectors.
//!
//! [`Operator`] is the universal carrier for observables, density matrices and
//! POVM elements. It wraps a square `nalgebra` matrix and guarantees finite
//! entries. Hermitian eigendecomposition, numerical rank and the positive
//! square root are provided here so that the rest of the crate never touches
//! `nalgebra` directly.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    /// Wraps a matrix, rejecting non-square shapes and non-finite entries.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Operator(m))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Operator(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds an operator from rows of complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Operator::from_fn(n, |i, j| if i == j { C64::from(values[i]) } else { ZERO })
    }

    /// Rank-one projector `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        Self::outer2(v, v)
    }

    /// `|u⟩⟨v|`.
    pub fn outer2(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Operator::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    /// Matrix unit `|row⟩⟨col|` in dimension `dim`.
    pub fn unit(dim: usize, row: usize, col: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(row, col)] = ONE;
        Operator(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Operator(self.0.map(|z| z * s))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Operator(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        assert_eq!(d, v.len());
        (0..d)
            .map(|i| (0..d).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `⟨u, A v⟩`, conjugate-linear in `u`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.mul_vec(v))
    }

    /// `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        Operator((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// Kronecker product `self ⊗ other` (row-major factor order).
    pub fn kron(&self, other: &Operator) -> Self {
        Operator(self.0.kronecker(&other.0))
    }

    /// `Tr(A* B)`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self * other - other * self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.singular_values().into_iter().fold(0.0, f64::max)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.0.singular_values().iter().copied().collect()
    }

    /// Deviation from hermiticity, `‖A − A*‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= tol::HERM * self.max_abs().max(1.0)
    }

    pub fn is_unitary(&self) -> bool {
        let d = self.dim();
        (&self.adjoint() * self - Operator::identity(d)).max_abs() <= tol::HERM
    }

    /// Minimum eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_part()
            .eigh()
            .values
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    /// Positivity at `τ_pos` relative to the operator norm.
    pub fn is_positive(&self) -> bool {
        self.is_hermitian() && self.min_eigenvalue() >= -tol::POS * self.norm().max(1.0)
    }

    /// Eigendecomposition of the Hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> Eigh {
        let h = self.hermitian_part();
        let eig = h.0.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        Eigh { values, vectors }
    }

    /// Applies `f` to the spectrum of the Hermitian part.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = self.eigh();
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            let w = f(*lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += v[i] * v[j].conj() * w;
                }
            }
        }
        Operator(out)
    }

    /// Positive square root; small negative eigenvalues are clipped to zero.
    pub fn sqrt_psd(&self) -> Self {
        self.spectral_map(|x| x.max(0.0).sqrt())
    }

    /// Moore-Penrose inverse square root on the support (eigenvalues above `cutoff`).
    pub fn inv_sqrt_psd(&self, cutoff: f64) -> Self {
        self.spectral_map(|x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 })
    }

    /// Conjugation `K* A K`.
    pub fn conj_by(&self, k: &Operator) -> Self {
        &(&k.adjoint() * self) * k
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.0)
    }
}

/// Eigenpairs of a Hermitian operator, ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                Operator(&self.0 $op &rhs.0)
            }
        }
        impl $tr<Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                Operator(self.0 $op rhs.0)
            }
        }
        impl $tr<&Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                Operator(self.0 $op &rhs.0)
            }
        }
        impl $tr<Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                Operator(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-self.0)
    }
}

/// `⟨u, v⟩`, conjugate-linear in the first slot.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Eigenpairs `(λ, u)` of `V V*`, where the columns of `V` are `vectors`
/// (all of length `dim`), keeping `λ > τ_rank · λ_max`. The `u` are an
/// orthonormal basis of the span and `λ` are the squared singular values of `V`.
pub fn range_eigenpairs(dim: usize, vectors: &[Vec<C64>]) -> Vec<(f64, Vec<C64>)> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let g = Operator::from_fn(dim, |i, j| vectors.iter().map(|v| v[i] * v[j].conj()).sum());
    let eig = g.eigh();
    let top = eig.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Vec::new();
    }
    eig.values
        .into_iter()
        .zip(eig.vectors)
        .filter(|(l, _)| *l > tol::RANK * top)
        .collect()
}

/// Orthonormal basis of the span of `vectors`, rank decided as in
/// [`range_eigenpairs`].
pub fn orthonormal_span(dim: usize, vectors: &[Vec<C64>]) -> Vec<Vec<C64>> {
    range_eigenpairs(dim, vectors).into_iter().map(|(_, u)| u).collect()
}

/// Numerical rank of the matrix whose columns are `vectors`.
pub fn rank(dim: usize, vectors: &[Vec<C64>]) -> usize {
    orthonormal_span(dim, vectors).len()
}

// -- JSON wire format: complex numbers as [re, im], matrices as row arrays --

pub(crate) fn c_to_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub(crate) fn pair_to_c(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = (0..d)
            .map(|i| (0..d).map(|j| c_to_pair(self.0[(i, j)])).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(pair_to_c).collect())
            .collect();
        Operator::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Serde adapter for complex vectors as arrays of `[re, im]`.
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|z| c_to_pair(*z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(pair_to_c).collect())
    }
}

/// Pauli matrices, handy in tests and examples.
pub mod pauli {
    use super::*;

    pub fn x() -> Operator {
        Operator::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
    }

    pub fn y() -> Operator {
        Operator::from_fn(2, |i, j| match (i, j) {
            (0, 1) => -I,
            (1, 0) => I,
            _ => ZERO,
        })
    }

    pub fn z() -> Operator {
        Operator::diag(&[1.0, -1.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let a = pauli::x().scale(0.3) + pauli::z().scale(0.4);
        let e = a.eigh();
        assert!((e.values[0] + 0.5).abs() < 1e-14);
        assert!((e.values[1] - 0.5).abs() < 1e-14);
        let rebuilt = a.spectral_map(|x| x);
        assert!((rebuilt - a).max_abs() < 1e-14);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let p = Operator::outer(&[ONE, ZERO]);
        assert!((p.sqrt_psd() - p).max_abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_uses_pairs() {
        let y = pauli::y();
        let s = serde_json::to_string(&y).unwrap();
        assert_eq!(s, "[[[0.0,0.0],[-0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, y);
    }

    #[test]
    fn rejects_ragged_and_nan() {
        assert!(serde_json::from_str::<Operator>("[[[1,0],[0,0]]]").is_err());
        assert!(Operator::from_matrix(DMatrix::from_element(1, 1, C64::new(f64::NAN, 0.0))).is_err());
    }

    #[test]
    fn rank_of_dependent_vectors() {
        let v = vec![ONE, ONE];
        let w = vec![ONE.scale(2.0), ONE.scale(2.0)];
        assert_eq!(rank(2, &[v, w]), 1);
    }
}
