use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("iteration limit of {limit} reached")]
    IterationLimit { limit: usize },
    #[error("solver lost feasibility: residual {residual:e} after refactoring")]
    Numerical { residual: f64 },
}
