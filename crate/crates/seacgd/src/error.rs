use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("accuracy eps = {eps} outside the admissible regime (requires eps <= L^2/rho = {limit})")]
    Regime { eps: f64, limit: f64 },

    #[error("degenerate problem: f(x0) - fstar = {delta_f}, must be positive")]
    DegenerateProblem { delta_f: f64 },

    #[error("worker {worker} panicked during a parallel run")]
    WorkerPanic { worker: usize },

    #[error("trace schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
