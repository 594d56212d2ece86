use thiserror::Error;

/// Errors raised anywhere in the modal analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} below {threshold:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, threshold: f64 },

    #[error("symmetric eigensolver failed to converge")]
    ConvergenceFailure,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid dipole: {0}")]
    InvalidDipole(String),

    #[error("elements {a} and {b} overlap (edge-to-edge separation {separation:e})")]
    Overlap { a: usize, b: usize, separation: f64 },

    #[error("non-finite impedance entry at ({row}, {col})")]
    QuadratureFailure { row: usize, col: usize },

    #[error("requested {requested} modes but only {available} exist")]
    KTooLarge { requested: usize, available: usize },

    #[error("mode {mode} has non-positive modal radiated power {p_r:e}")]
    SingularModalPower { mode: usize, p_r: f64 },

    #[error("column {0} is identically zero")]
    ZeroColumn(usize),

    #[error("subspace mode {mode} has no full-space partner (best similarity {similarity:.4})")]
    AmbiguousMatch { mode: usize, similarity: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
