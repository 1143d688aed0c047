use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrexError {
    /// Malformed input: non-finite entries, dimension mismatch, bad parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The model admits objects with unbounded error, or a required matrix is singular.
    #[error("model-degeneracy: {0}")]
    ModelDegeneracy(String),

    /// A regularization endpoint (tau = 0 or tau = 1) has a singular kernel-restricted matrix.
    #[error("endpoint-degenerate: the kernel-restricted matrix is singular at tau = {0}")]
    EndpointDegenerate(f64),

    /// No model-consistent object reproduces the observed data.
    #[error("inconsistent-data: {0}")]
    InconsistentData(String),

    /// A linear program that should be feasible came back infeasible or unbounded.
    #[error("infeasible-model: {0}")]
    InfeasibleModel(String),
}

pub type Result<T> = std::result::Result<T, OrexError>;
