use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Invalid sparse structure or block layout.
    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    /// Direct solve failed or did not meet the residual contract.
    #[error("singular or ill-conditioned system (achieved residual {residual:.3e})")]
    SingularSystem { residual: f64 },

    /// Cholesky hit a non-positive pivot on a matrix flagged SPD.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// Mesh construction rejected the requested layout.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Time partition is not strictly increasing or is empty.
    #[error("invalid time partition: {0}")]
    InvalidPartition(String),

    /// Evaluation time outside the trajectory's span.
    #[error("time {t} outside [0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },

    /// A time step could not be completed.
    #[error("step failed on interval {interval}: {source}")]
    StepFailed {
        interval: usize,
        #[source]
        source: Box<Error>,
    },

    /// A refinement ladder too short to measure a rate.
    #[error("resolution ladder needs at least two entries, got {0}")]
    LadderTooShort(usize),

    /// Configuration rejected before any computation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The requested discrete reference is not available for this setup.
    #[error("discrete mode reference unavailable: {0}")]
    NoDiscreteMode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
