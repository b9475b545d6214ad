//! The primal training problem: minimize `sum_j a_j' K_j a_j` over the kernel
//! expansion coefficients subject to every compiled constraint piece on
//! `p = K a (+ b)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::compile::{
    assemble_matrix, compile_formula, consistency_blocks, pointwise_block, CompileError, ConstantPieces,
    ConstraintBlock, ConstraintMatrix,
};
use crate::config::Tolerances;
use crate::grounding::{build_grounding_index, GroundingError, GroundingIndex};
use crate::kernels::{cross_gram, gram, psd_check, Definiteness, KernelError, KernelSpec};
use crate::logic::{parse_formula, LogicError};
use crate::problem::ProblemFile;
use crate::solver::{KktResiduals, QpOutcome, QuadraticProgram, SolverError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("formulas[{index}]: {source}")]
    Formula {
        index: usize,
        #[source]
        source: LogicError,
    },
    #[error("formulas[{index}]: {source}")]
    FormulaCompile {
        index: usize,
        #[source]
        source: CompileError,
    },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("constraints are infeasible (phase-one value {phase_one_value:e})")]
    Infeasible { phase_one_value: f64 },
    #[error("training objective is unbounded below")]
    Unbounded,
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("input of dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Assembled primal problem.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    pub index: GroundingIndex,
    /// Logical blocks in formula order, then pointwise blocks in supervision
    /// order, then the lower/upper consistency pair of every coordinate.
    pub blocks: Vec<ConstraintBlock>,
    pub matrix: ConstraintMatrix,
    pub constants: ConstantPieces,
    pub kernels: Vec<KernelSpec>,
    pub grams: Vec<DMatrix<f64>>,
    pub bias: bool,
    pub tolerances: Tolerances,
}

pub fn assemble_problem(problem: &ProblemFile, constants: ConstantPieces) -> Result<TrainingProblem, TrainError> {
    let samples = problem.sample_sets();
    let index = build_grounding_index(&problem.predicates, &samples)?;
    let sig = index.signature();
    let mut blocks = Vec::new();
    for (i, text) in problem.formulas.iter().enumerate() {
        let f = parse_formula(text, &sig).map_err(|source| TrainError::Formula { index: i, source })?;
        let block = compile_formula(&f, &index, &format!("phi{}", i + 1))
            .map_err(|source| TrainError::FormulaCompile { index: i, source })?;
        blocks.push(block);
    }
    for s in &samples.supervisions {
        blocks.push(pointwise_block(s, &index)?);
    }
    blocks.extend(consistency_blocks(&index));
    let matrix = assemble_matrix(&blocks, index.len(), constants)?;
    let kernels: Vec<KernelSpec> = problem.predicates.iter().map(|d| problem.kernel_for(d)).collect();
    let grams = kernels
        .iter()
        .enumerate()
        .map(|(j, k)| gram(k, &index.inputs(j)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrainingProblem {
        index,
        blocks,
        matrix,
        constants,
        kernels,
        grams,
        bias: problem.options.bias,
        tolerances: problem.options.tolerances,
    })
}

impl TrainingProblem {
    pub fn coords(&self) -> usize {
        self.index.len()
    }

    pub fn predicates(&self) -> usize {
        self.grams.len()
    }

    /// Number of decision variables: coefficients plus one bias per predicate
    /// when enabled.
    pub fn dim(&self) -> usize {
        self.coords() + if self.bias { self.predicates() } else { 0 }
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn gram_blockdiag(&self) -> DMatrix<f64> {
        let s = self.coords();
        let mut k = DMatrix::zeros(s, s);
        for (j, slice) in self.index.slices().iter().enumerate() {
            k.view_mut((slice.offset, slice.offset), (slice.len(), slice.len()))
                .copy_from(&self.grams[j]);
        }
        k
    }

    /// `G` with `p = G x` for the decision vector `x`.
    pub fn design(&self) -> DMatrix<f64> {
        let s = self.coords();
        let mut g = DMatrix::zeros(s, self.dim());
        g.view_mut((0, 0), (s, s)).copy_from(&self.gram_blockdiag());
        if self.bias {
            for (j, slice) in self.index.slices().iter().enumerate() {
                for k in slice.range() {
                    g[(k, s + j)] = 1.0;
                }
            }
        }
        g
    }

    pub fn to_qp(&self) -> QuadraticProgram {
        let n = self.dim();
        let s = self.coords();
        let mut q = DMatrix::zeros(n, n);
        q.view_mut((0, 0), (s, s)).copy_from(&(self.gram_blockdiag() * 2.0));
        let a = self.matrix.to_dense().transpose() * self.design();
        QuadraticProgram::new(q, DVector::zeros(n)).with_inequalities(a, self.matrix.offsets())
    }

    pub fn definiteness(&self) -> Vec<Definiteness> {
        self.grams
            .iter()
            .map(|k| psd_check(k, self.tolerances.definiteness))
            .collect()
    }

    /// All Gram matrices positive-definite and no bias: the optimal `p` is
    /// unique.
    pub fn has_unique_optimum(&self) -> bool {
        !self.bias && self.definiteness().iter().all(Definiteness::is_positive_definite)
    }

    /// The same problem without block `h`.
    pub fn without_block(&self, h: usize) -> TrainingProblem {
        let mut blocks = self.blocks.clone();
        blocks.remove(h);
        let matrix = assemble_matrix(&blocks, self.coords(), self.constants).expect("same coordinates");
        TrainingProblem {
            blocks,
            matrix,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateModel {
    pub name: String,
    pub domains: Vec<String>,
    pub kernel: KernelSpec,
    pub tuples: Vec<Vec<String>>,
    /// Concatenated sample coordinates of each tuple.
    pub inputs: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub bias: f64,
}

impl PredicateModel {
    /// `sum_s alpha_s k(x_s, x) + b`.
    pub fn predict(&self, x: &[f64]) -> Result<f64, TrainError> {
        let expected = self.inputs.first().map_or(x.len(), Vec::len);
        if x.len() != expected {
            return Err(TrainError::DimensionMismatch {
                expected,
                found: x.len(),
            });
        }
        Ok(self
            .inputs
            .iter()
            .zip(&self.alpha)
            .map(|(xs, a)| a * self.kernel.eval(xs, x))
            .sum::<f64>()
            + self.bias)
    }

    pub fn gram(&self) -> DMatrix<f64> {
        gram(&self.kernel, &self.inputs).expect("validated kernel")
    }

    /// Predictions at many points at once.
    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>, TrainError> {
        let k = cross_gram(&self.kernel, xs, &self.inputs)?;
        let a = DVector::from_column_slice(&self.alpha);
        Ok((k * a).iter().map(|v| v + self.bias).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub predicates: Vec<PredicateModel>,
    /// Grounding values `p*`.
    pub p: Vec<f64>,
    pub loss: f64,
    /// Per column of the constraint matrix: `|M_c . p + q_c| <= activity`.
    pub active: Vec<bool>,
    /// Per column: half the solver multiplier, so that `alpha = -M lambda`
    /// on every predicate with a definite Gram matrix.
    pub multipliers: Vec<f64>,
    pub kkt: KktResiduals,
    pub definiteness: Vec<Definiteness>,
    pub unique: bool,
    pub iterations: usize,
}

impl TrainedModel {
    /// Concatenated coefficient vector.
    pub fn alpha(&self) -> Vec<f64> {
        self.predicates.iter().flat_map(|m| m.alpha.iter().copied()).collect()
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateModel> {
        self.predicates.iter().find(|m| m.name == name)
    }

    pub fn predict(&self, predicate: &str, x: &[f64]) -> Result<f64, TrainError> {
        self.predicate(predicate)
            .ok_or_else(|| TrainError::UnknownPredicate(predicate.to_string()))?
            .predict(x)
    }

    /// Largest value of `M_c . p + q_c`.
    pub fn max_violation(&self, matrix: &ConstraintMatrix) -> f64 {
        matrix.max_violation(&self.p)
    }
}

/// `sum_j a_j' K_j a_j`.
pub fn loss(predicates: &[PredicateModel]) -> f64 {
    predicates
        .iter()
        .map(|m| {
            let a = DVector::from_column_slice(&m.alpha);
            a.dot(&(m.gram() * &a))
        })
        .sum()
}

pub fn solve_primal(tp: &TrainingProblem) -> Result<TrainedModel, TrainError> {
    let tol = &tp.tolerances;
    let qp = tp.to_qp();
    let sol = match qp.solve(tol)? {
        QpOutcome::Optimal(s) => s,
        QpOutcome::Infeasible { phase_one_value } => return Err(TrainError::Infeasible { phase_one_value }),
        QpOutcome::Unbounded => return Err(TrainError::Unbounded),
    };
    let s = tp.coords();
    let lambda: Vec<f64> = sol.mu.iter().map(|u| u / 2.0).collect();
    let definiteness = tp.definiteness();

    // On a singular Gram block any alpha + ker(K) is optimal; pick the
    // representative -M lambda, which has the same p and loss.
    let m_lambda = tp.matrix.to_dense() * DVector::from_column_slice(&lambda);
    let mut alpha: Vec<f64> = sol.x.rows(0, s).iter().copied().collect();
    for (j, slice) in tp.index.slices().iter().enumerate() {
        if !definiteness[j].is_positive_definite() {
            for k in slice.range() {
                alpha[k] = -m_lambda[k];
            }
        }
    }
    let biases: Vec<f64> = if tp.bias {
        sol.x.rows(s, tp.predicates()).iter().copied().collect()
    } else {
        vec![0.0; tp.predicates()]
    };

    let predicates: Vec<PredicateModel> = tp
        .index
        .slices()
        .iter()
        .enumerate()
        .map(|(j, slice)| PredicateModel {
            name: slice.name.clone(),
            domains: slice.domains.clone(),
            kernel: tp.kernels[j].clone(),
            tuples: slice.tuples.clone(),
            inputs: tp.index.inputs(j),
            alpha: alpha[slice.range()].to_vec(),
            bias: biases[j],
        })
        .collect();
    let mut p = Vec::with_capacity(s);
    for (j, m) in predicates.iter().enumerate() {
        let a = DVector::from_column_slice(&m.alpha);
        p.extend((&tp.grams[j] * a).iter().map(|v| v + biases[j]));
    }
    let active = tp
        .matrix
        .columns
        .iter()
        .map(|c| (c.coeffs.dot(&p) + c.offset).abs() <= tol.activity)
        .collect();
    Ok(TrainedModel {
        loss: loss(&predicates),
        predicates,
        p,
        active,
        multipliers: lambda,
        kkt: sol.kkt,
        unique: tp.has_unique_optimum(),
        definiteness,
        iterations: sol.iterations,
    })
}
