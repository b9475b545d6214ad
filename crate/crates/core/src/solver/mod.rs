//! Linear and quadratic programming plus the dense linear algebra the
//! analysis needs.

pub mod linalg;
pub mod lp;
pub mod qp;

pub use lp::{lp_feasible, LinearProgram, LpOutcome};
pub use qp::{KktResiduals, QpOutcome, QpSolution, QuadraticProgram};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
}
