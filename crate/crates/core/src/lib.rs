//! Steering measurements, twirling channels and completely positive
//! instruments on finite-dimensional operator algebras, plus a truncated
//! qubit-lattice simulation of a bit-commitment protocol and its EPR attack.
//!
//! The central pipeline takes a vector state `x`, a block algebra `B` (Bob)
//! and an ensemble `μ` of states on `B` whose barycenter is `ω_x|_B`, and
//! produces
//!
//! 1. a POVM `{A_i}` in the commutant `B′` with
//!    `⟨A_i^{1/2}x, B A_i^{1/2}x⟩ = λ_i ρ_i(B)` ([`steering`]),
//! 2. a CP instrument local to `B′` that realizes it ([`instrument`]),
//!    built from the twirl projection onto `B″` ([`twirl`]).

pub mod algebra;
pub mod bitcommit;
pub mod error;
pub mod instrument;
pub mod linalg;
pub mod random;
pub mod state;
pub mod steering;
pub mod suite;
pub mod tol;
pub mod twirl;

pub use algebra::{AlgebraSpec, Block, Layout};
pub use error::{Error, Result};
pub use instrument::{Instrument, Outcome};
pub use linalg::{Operator, C64};
pub use state::{barycenter, Component, Ensemble, SubState, VectorState};
pub use steering::{build_steering_povm, Povm};
pub use twirl::KrausChannel;
