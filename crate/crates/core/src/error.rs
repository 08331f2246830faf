use thiserror::Error;

/// Which side of a three-outcome relation failed the overlap check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefSide {
    /// The initial outcome `a` (or a basis column being gauged).
    Initial,
    /// The intermediate outcome `m`.
    Intermediate,
}

impl std::fmt::Display for RefSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RefSide::Initial => write!(f, "a"),
            RefSide::Intermediate => write!(f, "m"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QergoError {
    #[error("invalid dimension {dim}: need at least 2")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("post-selection is orthogonal to the initial state: |<f|psi>| = {overlap:.3e} <= {tol:.3e}")]
    OrthogonalPostselection { overlap: f64, tol: f64 },

    #[error("reference is orthogonal to outcome {side}={index}: |<b|{side}>| = {overlap:.3e} <= {tol:.3e}")]
    OrthogonalReference { side: RefSide, index: usize, overlap: f64, tol: f64 },

    #[error("pointer target index {index} out of range for dimension {dim}")]
    InvalidTarget { index: usize, dim: usize },

    #[error("direct measurement degenerate: no post-selected shots at position {position}")]
    DegenerateProtocol { position: usize },

    #[error("wavepacket does not fit the grid: {reason}")]
    GridOverflow { reason: String },

    #[error("matrix is {rows}x{cols}, expected square")]
    ShapeError { rows: usize, cols: usize },

    #[error("matrix is not hermitian: max|A - A^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("columns are not orthonormal: max|G - I| = {deviation:.3e}")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, QergoError>;
