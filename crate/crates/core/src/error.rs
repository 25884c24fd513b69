use thiserror::Error;

/// Errors raised by the symbol calculus, the residue functionals and the
/// matrix oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension {dim}: {what}")]
    UnsupportedDimension { dim: usize, what: &'static str },

    #[error("singular matrix encountered {0}")]
    Singular(String),

    #[error("spectral gap violated at {location}: {detail}")]
    SpectralGap { location: String, detail: String },

    #[error("insufficient expansion order: have {have}, need at least {need}")]
    InsufficientOrder { have: usize, need: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
