use thiserror::Error;

/// Errors surfaced by the filter design and synthesis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by (1+cos xi)/2 left a remainder of {remainder:.3e} (limit {limit:.3e}); the requested factor order is too high")]
    DivisibilityFailure { remainder: f64, limit: f64 },

    #[error("linear system for the design is singular: {0}")]
    SingularSystem(String),

    #[error("transfer matrix tail coefficient {value:.3e} at index {index} exceeds tolerance {limit:.3e}")]
    TailCoefficient {
        index: usize,
        value: f64,
        limit: f64,
    },

    #[error("eigenvalue iteration did not converge")]
    NonConvergence,

    #[error("root {root:?} has no reciprocal partner within tolerance {tol:.3e}")]
    UnpairedRoot { root: (f64, f64), tol: f64 },

    #[error("squared magnitude dips to {min:.3e} on [0, pi]; no spectral factorization exists")]
    Infeasible { min: f64 },

    #[error("integer-translate transition matrix has a degenerate eigenvalue-1 eigenspace")]
    DegenerateEigenspace,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
