use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network is not strongly connected: node {to} is unreachable from node {from}")]
    DisconnectedNetwork { from: usize, to: usize },

    #[error("invalid instance: {0}")]
    InstanceInvalid(String),

    #[error("customer {node} demands {demand} t which exceeds truck capacity {capacity} t")]
    DemandExceedsCapacity {
        node: usize,
        demand: f64,
        capacity: f64,
    },

    #[error("malformed solution: {0}")]
    MalformedSolution(String),

    #[error("no feasible solution found after {iterations} iterations: {cause}")]
    NoFeasibleSolutionFound { iterations: usize, cause: String },

    #[error("scheduling problem infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large for the exact scheduler: {0}")]
    SizeLimitExceeded(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
