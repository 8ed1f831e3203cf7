use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid conic problem: {0}")]
    InvalidProblem(String),
}
