use thiserror::Error;

/// Errors raised by the network model, channel synthesis, metrics and optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular input: {0}")]
    SingularInput(String),

    /// The active loop `I - Γ_A S_AA` (or a passive analogue) is numerically singular.
    #[error("unstable reflection loop in {context}: spectral radius of loop gain is {spectral_radius:.6}")]
    Instability { context: &'static str, spectral_radius: f64 },

    #[error("matrix {0} is singular")]
    Singular(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("touchstone parse error at line {line}: {message}")]
    Touchstone { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
