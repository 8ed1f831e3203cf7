//! A dense primal-dual interior-point solver for conic programs over
//! products of nonnegative orthants and real symmetric PSD cones.
//!
//! Problems are stated in standard form (see [`ConicProblem`]). The solver
//! runs a homogeneous self-dual embedding with Nesterov–Todd scaling and
//! Mehrotra predictor–corrector steps, and returns either an optimal
//! primal-dual pair or a Farkas-type infeasibility certificate.

pub mod cone;
mod error;
mod hsd;
mod presolve;
mod problem;
mod scaling;

pub use cone::Cone;
pub use error::SolverError;
pub use hsd::{solve, ConicSolution, IterationRecord, SolverOptions, Status};
pub use problem::{ConicProblem, Residuals, SparseMatrix};
