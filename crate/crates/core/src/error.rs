use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into two groups for the CLI exit-code contract:
/// usage/parse problems (exit 2) and numerical failures (exit 3).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ElError {
    #[error("parameter {theta:?} is outside the model's domain")]
    ParameterOutOfDomain { theta: Vec<f64> },

    #[error("non-finite estimating function value at observation {row}")]
    NumericalFailure { row: usize },

    #[error("zero is not interior to the convex hull of the estimating functions at theta = {theta:?}")]
    InfeasibleTheta { theta: Vec<f64> },

    #[error("inner solver hit the iteration cap ({iterations})")]
    MaxIterations { iterations: usize },

    #[error("optimizer did not converge after {iterations} iterations (residual {residual:.3e}, on_boundary = {on_boundary})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        on_boundary: bool,
        trace: Vec<f64>,
    },

    #[error("no feasible parameter value was found")]
    InfeasibleRegion,

    #[error("the constraint set does not meet the feasible parameter region")]
    InfeasibleConstraint,

    #[error("restricted solution violates 1 + t'g > 1/n at observation {row}")]
    WeightViolation { row: usize },

    #[error("matrix is numerically singular (reciprocal condition {rcond:.3e})")]
    SingularMatrix { rcond: f64 },

    #[error("weighted empirical distributions come from different samples")]
    SampleMismatch,

    #[error("invalid argument: {0}")]
    DomainError(String),

    #[error("power approximation has degenerate variance (sigma = {sigma:.3e})")]
    DegenerateVariance { sigma: f64 },

    #[error("no sign change or hull boundary found while scanning for the {side} endpoint")]
    NoBracket { side: &'static str },

    #[error("parse error at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },

    #[error("usage: {0}")]
    Usage(String),
}

impl ElError {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            ElError::ParseError { .. } | ElError::Usage(_) | ElError::DomainError(_)
        )
    }

    /// Short machine-readable tag, used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            ElError::ParameterOutOfDomain { .. } => "ParameterOutOfDomain",
            ElError::NumericalFailure { .. } => "NumericalFailure",
            ElError::InfeasibleTheta { .. } => "InfeasibleTheta",
            ElError::MaxIterations { .. } => "MaxIterations",
            ElError::NoConvergence { .. } => "NoConvergence",
            ElError::InfeasibleRegion => "InfeasibleRegion",
            ElError::InfeasibleConstraint => "InfeasibleConstraint",
            ElError::WeightViolation { .. } => "WeightViolation",
            ElError::SingularMatrix { .. } => "SingularMatrix",
            ElError::SampleMismatch => "SampleMismatch",
            ElError::DomainError(_) => "DomainError",
            ElError::DegenerateVariance { .. } => "DegenerateVariance",
            ElError::NoBracket { .. } => "NoBracket",
            ElError::ParseError { .. } => "ParseError",
            ElError::Usage(_) => "Usage",
        }
    }
}

pub type Result<T> = std::result::Result<T, ElError>;
