use thiserror::Error;

/// Errors raised by the geometry kernels and the flow engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrwError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("graph is not space-like at node {node} (radicand {radicand:e}, margin {margin:e})")]
    NotSpacelike {
        node: usize,
        radicand: f64,
        margin: f64,
    },
    #[error("non-finite value after step {step} at node {node}")]
    NumericalBlowup { step: u64, node: usize },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("operation requires a {expected} mesh")]
    WrongTopology { expected: &'static str },
}

pub type Result<T> = std::result::Result<T, GrwError>;
