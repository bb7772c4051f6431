use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("spectrum is not Hermitian-symmetric (asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e})")]
    SymmetryViolation { asymmetry: f64, tolerance: f64 },
    #[error("stencil of {rows}x{cols} does not fit in a {side}x{side} grid")]
    StencilTooLarge { rows: usize, cols: usize, side: usize },
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },
    #[error("operator is not differential: null-frequency response {0} is not zero")]
    NonDifferentialOperator(f64),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("singular prior: {0}")]
    SingularPrior(String),
    #[error("singular covariance: zero posterior precision at frequency index {0}")]
    SingularCovariance(usize),
    #[error("degenerate update: {0}")]
    DegenerateUpdate(String),
    #[error("invalid PSF box: {0}")]
    InvalidBox(String),
    #[error("grid too large for dense computation: side {side} exceeds {max}")]
    TooLarge { side: usize, max: usize },
    #[error("dense matrix is singular or not positive definite")]
    SingularMatrix,
    #[error("reference image has zero norm")]
    ZeroReference,
    #[error("chain is empty after discarding {burn_in} samples")]
    EmptyChain { burn_in: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
