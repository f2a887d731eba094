use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("point is off the surface (residual {residual:.3e} > tolerance {tolerance:.3e})")]
    OffSurface { residual: f64, tolerance: f64 },
    #[error("inadmissible configuration: {0}")]
    Inadmissible(String),
    #[error("operation requires a {expected} configuration")]
    WrongKind { expected: &'static str },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("body is not strictly convex: {0}")]
    NotConvex(String),
    #[error("configuration is not critical (gradient norm {0:.3e})")]
    NotCritical(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("clause {clause} does not apply: {reason}")]
    BadClause { clause: String, reason: String },
    #[error("ring axiom violated: {0}")]
    Axiom(String),
    #[error("no start converged ({0} attempted)")]
    NoSolutions(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
