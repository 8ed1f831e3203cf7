use rcbf_solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "error vector on link (bs {bs}, cell {cell}, user {user}) lies outside its ellipsoid (e^H C e = {value:.6e})"
    )]
    OutsideEllipsoid { bs: usize, cell: usize, user: usize, value: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("interference caps are required for single-cell designs")]
    MissingCaps,
    #[error("no feasible beamformer candidate after {0} randomization trials")]
    ExtractionFailed(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
