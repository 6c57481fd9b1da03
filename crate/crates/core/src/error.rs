use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {dim} exceeds the limit of {limit} for {what}")]
    DimensionTooLarge {
        what: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("spectral radius {rho} is not below 1; no contraction certificate exists")]
    NoCertificate { rho: f64 },

    #[error("certificate not applicable: {0}")]
    Inapplicable(String),

    #[error("certificate parameter window is empty: {0}")]
    DegenerateWindow(String),

    #[error("bound propagation is not guaranteed: {0}")]
    PropagationInvalid(String),

    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
