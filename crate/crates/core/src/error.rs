use crate::C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix exponential overflow (norm {norm:e})")]
    ExpOverflow { norm: f64 },
    #[error("singular leading coefficient at node {node}")]
    SingularLead { node: usize },
    #[error("not an accelerant: truncated operator fails positivity at tau = {tau} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { tau: f64, min_eigenvalue: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("Neumann series did not converge: {terms} terms, last term norm {last:e}")]
    NoConvergence { terms: usize, last: f64 },
    #[error("validation `{check}` failed: residual {residual:e} exceeds {tolerance:e}")]
    Validation {
        check: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("inadmissible triple: residual {0:e}")]
    Inadmissible(f64),
    #[error("spectral parameter {0} hits the spectrum")]
    SpectralPoint(C64),
    #[error("no sample at spectral parameter {0}")]
    MissingSpectralPoint(C64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
