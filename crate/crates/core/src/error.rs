use thiserror::Error;

pub type Result<T, E = CwmError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CwmError {
    #[error("matrix is singular or not positive definite (pivot {pivot})")]
    SingularMatrix { pivot: usize },

    #[error("log-sum-exp of values that are all -inf")]
    AllNegInfinity,

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("row {row}: label {label} is outside 1..={k}")]
    LabelOutOfRange { row: usize, label: usize, k: usize },

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("component {component} has effective mass {mass:.4} (< 2)")]
    EmptyComponent { component: usize, mass: f64 },

    #[error("weighted design for component {component} is numerically singular")]
    SingularDesign { component: usize },

    #[error("variance floor hit on consecutive iterations")]
    VarianceCollapse,

    #[error("all {} restarts failed: {}", .0.len(), .0.join("; "))]
    AllRestartsFailed(Vec<String>),

    #[error("every grid cell failed to fit")]
    AllCellsFailed,

    #[error("partitions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("negative Hessian is not positive definite (direction {direction})")]
    HessianNotPd { direction: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
