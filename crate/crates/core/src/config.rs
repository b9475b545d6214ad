use serde::{Deserialize, Serialize};

/// Every numeric threshold used by the solvers and the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// QP optimality: step length and multiplier sign tests.
    pub qp: f64,
    /// Admissible constraint violation of a returned point.
    pub feasibility: f64,
    /// Phase-one optimum above which an LP is declared infeasible.
    pub lp: f64,
    /// Singular values below `nullspace * sigma_max` count as zero.
    pub nullspace: f64,
    /// `|M_hi . p + q_hi| <= activity` marks a piece active.
    pub activity: f64,
    /// Entailment holds when every piece maximum is at most this.
    pub entailment: f64,
    /// Largest accepted residual of the multiplier system.
    pub residual: f64,
    /// Eigenvalue threshold separating definite from semidefinite Gram matrices.
    pub definiteness: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            qp: 1e-8,
            feasibility: 1e-9,
            lp: 1e-9,
            nullspace: 1e-10,
            activity: 1e-6,
            entailment: 1e-9,
            residual: 1e-7,
            definiteness: 1e-9,
            max_iterations: 10_000,
        }
    }
}
