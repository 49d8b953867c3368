use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Array length / location / snapshot-grid mismatches.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Out-of-range arguments (negative magnitudes, q < 1, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The conductivity graph does not admit a stationary (rate-zero)
    /// resolvent; the weak solution is not unique in this regime.
    #[error("degenerate conductivity: {0}")]
    Degenerate(String),
    /// Scalar root finder exhausted its iteration budget.
    #[error("resolvent failed to converge: {0}")]
    Convergence(String),
    /// Invalid solver or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Runtime failure inside a solver loop (non-finite fields, ...).
    #[error("solver error: {0}")]
    Solver(String),
    /// Adaptive time step collapsed below the resolvable scale.
    #[error("time step underflow: {0}")]
    Stiffness(String),
    /// Operation outside the supported graph/grid shapes.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
