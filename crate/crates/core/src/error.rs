use thiserror::Error;

use crate::radial_ivp::RadialProfile;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation defined only for one parity of `m` was called with the other.
    #[error("parity error: {0}")]
    Parity(String),

    /// Dimension outside the supported range (typically `N <= 2m`).
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("out of range: {0}")]
    Range(String),

    /// The integrator ran out of steps before it could classify the solution.
    #[error("integration inconclusive after {steps} steps (reached r = {radius})")]
    Inconclusive {
        steps: usize,
        radius: f64,
        partial: Box<RadialProfile>,
    },

    #[error("classification failed: {0}")]
    Classification(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("polynomial not admissible: {0}")]
    Admissibility(String),

    #[error("monotone iteration broke ordering at iteration {iteration}, node {node}: {detail}")]
    Monotonicity {
        iteration: usize,
        node: usize,
        detail: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 configuration, 3 numerical, 4 classification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Dimension(_) | Error::Admissibility(_) => 2,
            Error::Parity(_) | Error::Classification(_) => 4,
            _ => 3,
        }
    }
}
