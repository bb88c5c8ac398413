use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite state in path {path} at grid index {step}")]
    NonFiniteState { path: usize, step: usize },

    #[error("non-finite activation at layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("train-mode batch normalization needs at least two samples, got {0}")]
    BatchTooSmall(usize),

    #[error("forward cache is stale: parameters changed since the forward pass")]
    StaleCache,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite loss at time step {n}, iteration {m} (path {path})")]
    NonFiniteLoss { n: usize, m: usize, path: usize },

    #[error("training diverged at time step {n}, iteration {m}: loss {loss:e}")]
    Diverged { n: usize, m: usize, loss: f64 },

    #[error("time step {n}: {source}")]
    AtStep {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all runs failed: {0}")]
    RunsFailed(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Validation errors map to CLI exit code 1; everything else is a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::Config(_)
                | Error::BatchTooSmall(_)
        )
    }
}
