use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (symmetric part norm {defect:.3e})")]
    NotSkewSymmetric { defect: f64 },

    #[error("matrix is not a valid se(3) element: {reason}")]
    MalformedAlgebraElement { reason: &'static str },

    #[error("rotation angle {angle:.9} is too close to pi; logarithm branch is ambiguous")]
    LogBranchAmbiguous { angle: f64 },

    #[error("invalid rotation matrix: {reason}")]
    InvalidRotation { reason: String },

    #[error("invalid inertial parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("Riccati iteration did not converge after {iterations} iterations (last step norm {last_step:.3e})")]
    DareNotConverged { iterations: usize, last_step: f64 },

    #[error("cost matrix R is not positive definite")]
    CostNotPositiveDefinite,

    #[error(
        "dataset shape mismatch: {states} states and {inputs} inputs (need states = inputs + 1)"
    )]
    DatasetShape { states: usize, inputs: usize },

    #[error("normal equations are singular at lambda = 0; rerun with lambda > 0")]
    SingularRegression,

    #[error("identified input matrix has a singular lower block; cannot recover inertia")]
    SingularInputBlock,

    #[error(
        "insufficient excitation: regressor rank {rank} < 18; add exploration noise (sigma > 0)"
    )]
    InsufficientExcitation { rank: usize },

    #[error("state diverged at step {step} (|x| = {norm:.3e})")]
    Divergence { step: usize, norm: f64 },

    #[error("csv parse error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
