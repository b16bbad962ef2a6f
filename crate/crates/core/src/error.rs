//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian: ‖A - A†‖_F = {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPsd { min_eig: f64 },

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("not a valid POVM: {0}")]
    InvalidPovm(String),

    #[error("not a frame: {0}")]
    NotAFrame(String),

    #[error("probability vector invalid: {0}")]
    InvalidProbabilities(String),

    #[error("vanishing overlap Tr[U_β ν*] = {value:.3e} at group index {index}")]
    VanishingOverlap { index: usize, value: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
