use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry")]
    NonFinite,

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("operator is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not positive (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("not a state: {0}")]
    NotAState(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("infeasible: functional is not dominated by the vector state (residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("barycenter mismatch: ensemble barycenter differs from the vector state (residual {residual:.3e})")]
    BarycenterMismatch { residual: f64 },

    #[error("effects sum above the identity (largest eigenvalue {max_eigenvalue})")]
    NotSubUnital { max_eigenvalue: f64 },

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("group element ({g1}, {g2}) out of range for Z_{n} x Z_{n}")]
    OutOfRange { n: usize, g1: usize, g2: usize },

    #[error("outcome {label:?} is impossible (probability {probability:.3e})")]
    ImpossibleOutcome { label: String, probability: f64 },

    #[error("{sites} sites exceed the dense limit of {limit}")]
    TooLarge { sites: usize, limit: usize },

    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
