//! Numerical tolerances shared across the crate.

/// Hermiticity and equality of operators, relative to the operator scale.
pub const HERM: f64 = 1e-9;
/// Positivity: minimum eigenvalue of the Hermitian part may dip to `-POS * ‖A‖`.
pub const POS: f64 = 1e-9;
/// Normalization of vectors, traces and ensemble weights.
pub const NORM: f64 = 1e-12;
/// Squared singular values (Gram eigenvalues) below `RANK * σ_max²` count as zero.
pub const RANK: f64 = 1e-9;
/// Residual allowed when solving for a commutant operator.
pub const RES: f64 = 1e-9;
/// Barycenter match on an operator basis.
pub const BARY: f64 = 1e-9;
