use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent layer widths or invalid hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("message {message} out of range for {count} messages")]
    MessageOutOfRange { message: usize, count: usize },
    /// The encoder produced a codeword too close to zero to normalize.
    #[error("degenerate codeword for message {message}: pre-normalization norm {norm:e}")]
    DegenerateCodeword { message: usize, norm: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    /// Non-finite loss; `step` is filled in by the training loop.
    #[error("training diverged at step {}: loss = {loss}", step.map_or("?".to_string(), |s| s.to_string()))]
    Divergence { step: Option<u64>, loss: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Cholesky factorization of the noise covariance failed.
    #[error("noise covariance factorization failed (rho = {rho})")]
    Factorization { rho: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no blocks were simulated")]
    NoBlocks,
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error("{label}: {source}")]
    Context {
        label: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with a label, e.g. the curve it was computed for.
    pub fn context(self, label: impl Into<String>) -> Self {
        Error::Context {
            label: label.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
