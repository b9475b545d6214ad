//! Which constraints can be dropped without changing the optimum.
//!
//! The optimal coefficients satisfy a linear stationarity system
//! `M lambda = alpha_target` with `lambda >= 0` supported on active pieces.
//! A block is removable when some such `lambda` vanishes on all of its
//! pieces and the optimum is unique; it is entailed when the other blocks
//! already imply it on every valuation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::compile::{ConstraintBlock, Family};
use crate::config::Tolerances;
use crate::solver::linalg::{lstsq, nullspace};
use crate::solver::{LinearProgram, LpOutcome, SolverError};
use crate::train::{solve_primal, TrainError, TrainedModel, TrainingProblem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("stationarity system is inconsistent (residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("{active} active blocks exceed the minimal-set search limit of {limit}")]
    LimitExceeded { active: usize, limit: usize },
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
}

/// Sign relating multipliers to coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationaritySign {
    /// `M lambda = -alpha`, the sign produced by differentiating the
    /// Lagrangian of the training problem; certificates are sound.
    #[default]
    Lagrangian,
    /// `M lambda = +alpha`.
    Direct,
}

impl StationaritySign {
    fn factor(self) -> f64 {
        match self {
            StationaritySign::Lagrangian => -1.0,
            StationaritySign::Direct => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisMode {
    /// Every block is a candidate and carries a multiplier.
    #[default]
    All,
    /// Only logical blocks; the other families' contribution is subtracted
    /// from the target using the solver multipliers.
    Logical,
}

/// `R lambda = target` over a chosen set of constraint columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaritySystem {
    pub matrix: DMatrix<f64>,
    pub target: DVector<f64>,
    /// Column of the full constraint matrix behind each column here.
    pub columns: Vec<usize>,
    /// Block id of each column.
    pub blocks: Vec<usize>,
    pub active: Vec<bool>,
}

impl StationaritySystem {
    pub fn new(matrix: DMatrix<f64>, target: DVector<f64>, blocks: Vec<usize>, active: Vec<bool>) -> Self {
        assert_eq!(matrix.ncols(), blocks.len());
        assert_eq!(matrix.ncols(), active.len());
        assert_eq!(matrix.nrows(), target.len());
        StationaritySystem {
            columns: (0..blocks.len()).collect(),
            matrix,
            target,
            blocks,
            active,
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_columns(&self, h: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.blocks[c] == h).collect()
    }

    /// Blocks owning at least one active column, ascending.
    pub fn active_blocks(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.len()).filter(|&c| self.active[c]).map(|c| self.blocks[c]).collect();
        v.dedup();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `|R lambda - target|_inf`
    pub fn residual(&self, lambda: &DVector<f64>) -> f64 {
        (&self.matrix * lambda - &self.target).amax()
    }
}

/// Builds the stationarity system of a trained model.
///
/// Rows are the grounding coordinates, plus one row per predicate when a
/// bias is trained (its stationarity forces the multipliers of each
/// predicate to balance).
pub fn stationarity_system(
    tp: &TrainingProblem,
    model: &TrainedModel,
    mode: AnalysisMode,
    sign: StationaritySign,
) -> StationaritySystem {
    let s = tp.coords();
    let m = tp.matrix.to_dense();
    let extra = if tp.bias { tp.predicates() } else { 0 };
    let mut rows = DMatrix::zeros(s + extra, m.ncols());
    rows.view_mut((0, 0), (s, m.ncols())).copy_from(&m);
    if tp.bias {
        for (j, slice) in tp.index.slices().iter().enumerate() {
            for c in 0..m.ncols() {
                rows[(s + j, c)] = slice.range().map(|k| m[(k, c)]).sum();
            }
        }
    }
    let sf = sign.factor();
    let mut target = DVector::zeros(s + extra);
    for (k, a) in model.alpha().into_iter().enumerate() {
        target[k] = sf * a;
    }
    let keep: Vec<usize> = (0..m.ncols())
        .filter(|&c| match mode {
            AnalysisMode::All => true,
            AnalysisMode::Logical => tp.blocks[tp.matrix.columns[c].block].family == Family::Logical,
        })
        .collect();
    if mode == AnalysisMode::Logical {
        // subtract R_other * lambda_convention with lambda_convention = -sf * lambda_solver
        for c in (0..m.ncols()).filter(|c| !keep.contains(c)) {
            let l = -sf * model.multipliers[c];
            if l != 0.0 {
                target -= rows.column(c) * l;
            }
        }
    }
    StationaritySystem {
        matrix: rows.select_columns(&keep),
        target,
        blocks: keep.iter().map(|&c| tp.matrix.columns[c].block).collect(),
        active: keep.iter().map(|&c| model.active[c]).collect(),
        columns: keep,
    }
}

/// The right-hand side `alpha_target` on the grounding coordinates.
pub fn logical_coefficients(
    tp: &TrainingProblem,
    model: &TrainedModel,
    mode: AnalysisMode,
    sign: StationaritySign,
) -> DVector<f64> {
    stationarity_system(tp, model, mode, sign).target.rows(0, tp.coords()).into_owned()
}

/// `lambda(t) = particular + basis * t`, every solution of the system with
/// inactive columns pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSolution {
    pub particular: DVector<f64>,
    /// Orthonormal kernel basis of the active columns, zero on inactive rows.
    pub basis: DMatrix<f64>,
    /// `R * particular`: the target projected onto the attainable range.
    pub projected_target: DVector<f64>,
    pub residual: f64,
}

impl GeneralSolution {
    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn at(&self, t: &DVector<f64>) -> DVector<f64> {
        &self.particular + &self.basis * t
    }
}

pub fn solve_problem2(sys: &StationaritySystem, tol: &Tolerances) -> Result<GeneralSolution, AnalyzeError> {
    let free: Vec<usize> = (0..sys.len()).filter(|&c| sys.active[c]).collect();
    let la = lstsq(&sys.matrix.select_columns(&free), &sys.target, tol.nullspace);
    let mut particular = DVector::zeros(sys.len());
    for (i, &c) in free.iter().enumerate() {
        particular[c] = la[i];
    }
    general_solution_from(sys, particular, tol)
}

/// The general solution around a given particular solution, which must
/// vanish on inactive columns.
pub fn general_solution_from(
    sys: &StationaritySystem,
    particular: DVector<f64>,
    tol: &Tolerances,
) -> Result<GeneralSolution, AnalyzeError> {
    let free: Vec<usize> = (0..sys.len()).filter(|&c| sys.active[c]).collect();
    let projected_target = &sys.matrix * &particular;
    let residual = (&projected_target - &sys.target).amax();
    let pinned = (0..sys.len()).any(|c| !sys.active[c] && particular[c] != 0.0);
    if residual > tol.residual || pinned {
        return Err(AnalyzeError::Inconsistent { residual });
    }
    let z = nullspace(&sys.matrix.select_columns(&free), tol.nullspace);
    let mut basis = DMatrix::zeros(sys.len(), z.ncols());
    for (i, &c) in free.iter().enumerate() {
        basis.row_mut(c).copy_from(&z.row(i));
    }
    Ok(GeneralSolution {
        particular,
        basis,
        projected_target,
        residual,
    })
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

/// A `lambda >= 0` solving the system with slackness, optionally vanishing
/// on one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierCertificate {
    pub lambda: Vec<f64>,
    /// Coordinates in the kernel basis: `lambda = particular + basis * t`.
    pub t: Vec<f64>,
    pub deactivated_block: Option<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Deactivation {
    Certificate(MultiplierCertificate),
    /// No non-negative solution avoids the block; the value is the optimum of
    /// the phase-one LP (sum of equality violations).
    Impossible { phase_one_value: f64 },
}

/// Minimum-sum `lambda >= 0` supported on `allowed`, or the phase-one value.
fn support_lp(
    sys: &StationaritySystem,
    gs: &GeneralSolution,
    allowed: &[usize],
    tol: &Tolerances,
) -> Result<Result<DVector<f64>, f64>, SolverError> {
    let target = &gs.projected_target;
    let mut lp = LinearProgram::new(allowed.len()).minimize(vec![1.0; allowed.len()]);
    for r in 0..sys.matrix.nrows() {
        let row: Vec<f64> = allowed.iter().map(|&c| sys.matrix[(r, c)]).collect();
        if row.iter().all(|x| *x == 0.0) && target[r].abs() <= tol.residual {
            continue;
        }
        lp.add_eq(row, target[r]);
    }
    let iterations = tol.max_iterations.max(50 * (allowed.len() + sys.matrix.nrows()));
    Ok(match lp.solve(tol.residual, iterations)? {
        LpOutcome::Optimal { x, .. } => {
            let mut lambda = DVector::zeros(sys.len());
            for (i, &c) in allowed.iter().enumerate() {
                lambda[c] = clean(x[i].max(0.0));
            }
            Ok(lambda)
        }
        LpOutcome::Infeasible { phase_one_value } => Err(phase_one_value),
        LpOutcome::Unbounded => unreachable!("objective bounded below by zero"),
    })
}

fn certificate(
    sys: &StationaritySystem,
    gs: &GeneralSolution,
    lambda: DVector<f64>,
    block: Option<usize>,
) -> MultiplierCertificate {
    let t = gs.basis.transpose() * (&lambda - &gs.particular);
    MultiplierCertificate {
        residual: sys.residual(&lambda),
        lambda: lambda.iter().copied().collect(),
        t: t.iter().map(|x| clean(*x)).collect(),
        deactivated_block: block,
    }
}

/// Searches for a certificate with every piece of block `h` at zero.
pub fn deactivate(
    sys: &StationaritySystem,
    gs: &GeneralSolution,
    h: usize,
    tol: &Tolerances,
) -> Result<Deactivation, SolverError> {
    let allowed: Vec<usize> = (0..sys.len()).filter(|&c| sys.active[c] && sys.blocks[c] != h).collect();
    Ok(match support_lp(sys, gs, &allowed, tol)? {
        Ok(lambda) => Deactivation::Certificate(certificate(sys, gs, lambda, Some(h))),
        Err(phase_one_value) => Deactivation::Impossible { phase_one_value },
    })
}

/// Range `[min, max]` of each `t_i` over the certificates deactivating `h`;
/// `None` when there is none.
pub fn deactivation_t_bounds(
    sys: &StationaritySystem,
    gs: &GeneralSolution,
    h: usize,
    tol: &Tolerances,
) -> Result<Option<Vec<(f64, f64)>>, SolverError> {
    let n = gs.dimension();
    let mut base = LinearProgram::new(n).all_free();
    for c in 0..sys.len() {
        if !sys.active[c] {
            continue;
        }
        let row: Vec<f64> = gs.basis.row(c).iter().copied().collect();
        if sys.blocks[c] == h {
            base.add_eq(row, -gs.particular[c]);
        } else {
            // particular + V t >= 0
            base.add_ge(row, -gs.particular[c]);
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut bounds = [0.0; 2];
        for (k, s) in [1.0, -1.0].into_iter().enumerate() {
            let mut c = vec![0.0; n];
            c[i] = s;
            let lp = LinearProgram {
                objective: c,
                ..base.clone()
            };
            match lp.solve(tol.lp, tol.max_iterations)? {
                LpOutcome::Optimal { value, .. } => bounds[k] = s * value,
                LpOutcome::Infeasible { .. } => return Ok(None),
                LpOutcome::Unbounded => bounds[k] = -s * f64::INFINITY,
            }
        }
        out.push((clean(bounds[0]), clean(bounds[1])));
    }
    if n == 0 && !crate::solver::lp_feasible(&base, tol.lp, tol.max_iterations)? {
        return Ok(None);
    }
    Ok(Some(out))
}

/// A solution of the system vanishing on block `h` without the sign
/// constraint, if one exists.
pub fn relaxed_deactivate(
    sys: &StationaritySystem,
    gs: &GeneralSolution,
    h: usize,
    tol: &Tolerances,
) -> Option<Vec<f64>> {
    let cols = sys.block_columns(h);
    if cols.is_empty() {
        return Some(gs.particular.iter().copied().collect());
    }
    let vh = gs.basis.select_rows(&cols);
    let rhs = -DVector::from_iterator(cols.len(), cols.iter().map(|&c| gs.particular[c]));
    let t = lstsq(&vh, &rhs, tol.nullspace);
    if (&vh * &t - &rhs).amax() > tol.residual {
        return None;
    }
    let mut lambda = gs.at(&t);
    for &c in &cols {
        lambda[c] = 0.0;
    }
    Some(lambda.iter().map(|x| clean(*x)).collect())
}

/// Where the grounding vector ranges when testing consequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentDomain {
    /// Every valuation in `[0,1]^S`.
    UnitCube,
    /// All of `R^S`; range limits come from the consistency blocks.
    FeasibleSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entailment {
    pub entailed: bool,
    /// The other blocks admit no valuation at all.
    pub vacuous: bool,
    /// Max of each piece over the region; `None` when unbounded.
    pub piece_maxima: Vec<Option<f64>>,
}

/// Whether the blocks other than `h` force every piece of `h` to be `<= 0`.
pub fn grounded_entailment(
    blocks: &[ConstraintBlock],
    h: usize,
    coords: usize,
    domain: EntailmentDomain,
    tol: &Tolerances,
) -> Result<Entailment, SolverError> {
    let mut base = LinearProgram::new(coords);
    if domain == EntailmentDomain::FeasibleSet {
        base = base.all_free();
    } else {
        for k in 0..coords {
            let mut e = vec![0.0; coords];
            e[k] = 1.0;
            base.add_le(e, 1.0);
        }
    }
    for (g, b) in blocks.iter().enumerate() {
        if g == h {
            continue;
        }
        for piece in b.pieces.iter().filter(|p| !p.is_trivial()) {
            base.add_le(piece.coeffs.to_dense(coords), -piece.offset);
        }
    }
    if !crate::solver::lp_feasible(&base, tol.lp, tol.max_iterations)? {
        return Ok(Entailment {
            entailed: true,
            vacuous: true,
            piece_maxima: vec![None; blocks[h].pieces.len()],
        });
    }
    let mut piece_maxima = Vec::with_capacity(blocks[h].pieces.len());
    for piece in &blocks[h].pieces {
        if piece.coeffs.is_zero() {
            piece_maxima.push(Some(piece.offset));
            continue;
        }
        let lp = LinearProgram {
            objective: piece.coeffs.scaled(-1.0).to_dense(coords),
            ..base.clone()
        };
        piece_maxima.push(match lp.solve(tol.lp, tol.max_iterations)? {
            LpOutcome::Optimal { value, .. } => Some(clean(piece.offset - value)),
            LpOutcome::Unbounded => None,
            LpOutcome::Infeasible { .. } => unreachable!("region checked feasible"),
        });
    }
    Ok(Entailment {
        entailed: piece_maxima.iter().all(|m| m.is_some_and(|v| v <= tol.entailment)),
        vacuous: false,
        piece_maxima,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportSet {
    /// Block ids, ascending.
    pub blocks: Vec<usize>,
    pub lambda: Vec<f64>,
}

/// All smallest sets of blocks whose multipliers alone solve the system.
pub fn minimal_support_sets(
    sys: &StationaritySystem,
    gs: &GeneralSolution,
    limit: usize,
    tol: &Tolerances,
) -> Result<Vec<SupportSet>, AnalyzeError> {
    let active = sys.active_blocks();
    if active.len() > limit {
        return Err(AnalyzeError::LimitExceeded {
            active: active.len(),
            limit,
        });
    }
    for k in 0..=active.len() {
        let mut found = Vec::new();
        for subset in combinations(&active, k) {
            let allowed: Vec<usize> = (0..sys.len())
                .filter(|&c| sys.active[c] && subset.contains(&sys.blocks[c]))
                .collect();
            if let Ok(lambda) = support_lp(sys, gs, &allowed, tol)? {
                found.push(SupportSet {
                    blocks: subset,
                    lambda: lambda.iter().copied().collect(),
                });
            }
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Ok(vec![])
}

/// `k`-subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if k > n {
        return vec![];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Full problem against the problem without one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ablation {
    pub block: String,
    pub loss_full: f64,
    pub loss_ablated: f64,
    /// `loss_full - loss_ablated`, non-negative up to solver accuracy.
    pub loss_gap: f64,
    /// `|p_full - p_ablated|_inf`
    pub p_distance: f64,
    /// Largest violation of the full constraints at the ablated optimum.
    pub ablated_violation: f64,
    pub ablated_feasible_for_full: bool,
}

pub fn ablate_and_compare(tp: &TrainingProblem, h: usize) -> Result<Ablation, TrainError> {
    let full = solve_primal(tp)?;
    ablate_against(tp, &full, h)
}

/// Like [`ablate_and_compare`] with the full model already trained.
pub fn ablate_against(tp: &TrainingProblem, full: &TrainedModel, h: usize) -> Result<Ablation, TrainError> {
    let ablated = solve_primal(&tp.without_block(h))?;
    let p_distance = full
        .p
        .iter()
        .zip(&ablated.p)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let violation = tp.matrix.max_violation(&ablated.p).max(0.0);
    Ok(Ablation {
        block: tp.blocks[h].name.clone(),
        loss_full: full.loss,
        loss_ablated: ablated.loss,
        loss_gap: full.loss - ablated.loss,
        p_distance,
        ablated_violation: violation,
        ablated_feasible_for_full: violation <= 1e-7,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Implied by the other blocks.
    Entailed,
    /// Certificate found and the optimum is unique.
    Removable,
    /// Certificate found, optimum not known to be unique.
    Candidate,
    /// No certificate exists.
    Necessary,
    /// The stationarity system could not be solved.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    /// 1-based block number.
    pub id: usize,
    pub name: String,
    pub family: Family,
    pub source: String,
    pub pieces: usize,
    pub active_pieces: usize,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<MultiplierCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub necessity_phase_one: Option<f64>,
    /// Sign-unconstrained solution vanishing on the block, reported when no
    /// certificate exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed_lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entailment: Option<Entailment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Ablation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnInfo {
    pub label: String,
    pub block: usize,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub mode: AnalysisMode,
    pub sign: StationaritySign,
    pub tolerances: Tolerances,
    pub alpha: Vec<f64>,
    pub loss: f64,
    pub alpha_target: Vec<f64>,
    /// Column order shared by every `lambda` in the report.
    pub columns: Vec<ColumnInfo>,
    pub stationarity_residual: Option<f64>,
    pub nullspace_dimension: Option<usize>,
    pub unique: bool,
    pub blocks: Vec<BlockReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimal_support_sets: Option<Vec<NamedSupportSet>>,
}

/// A minimal support set as reported: 1-based block ids and names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedSupportSet {
    pub ids: Vec<usize>,
    pub names: Vec<String>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub mode: AnalysisMode,
    pub sign: StationaritySign,
    pub entailment: bool,
    pub minimal_sets: bool,
    pub ablation: bool,
    pub limit: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            mode: AnalysisMode::All,
            sign: StationaritySign::Lagrangian,
            entailment: false,
            minimal_sets: false,
            ablation: false,
            limit: 20,
        }
    }
}

pub fn removable_constraints(
    tp: &TrainingProblem,
    model: &TrainedModel,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, AnalyzeError> {
    let tol = &tp.tolerances;
    let sys = stationarity_system(tp, model, opts.mode, opts.sign);
    let gs = match solve_problem2(&sys, tol) {
        Ok(gs) => Some(gs),
        Err(AnalyzeError::Inconsistent { .. }) => None,
        Err(e) => return Err(e),
    };
    let considered: Vec<usize> = (0..tp.blocks.len())
        .filter(|&h| opts.mode == AnalysisMode::All || tp.blocks[h].family == Family::Logical)
        .collect();
    let mut blocks = Vec::with_capacity(considered.len());
    for &h in &considered {
        let b = &tp.blocks[h];
        let entailment = if opts.entailment {
            Some(grounded_entailment(
                &tp.blocks,
                h,
                tp.coords(),
                EntailmentDomain::FeasibleSet,
                tol,
            )?)
        } else {
            None
        };
        let (mut verdict, mut certificate, mut necessity_phase_one, mut relaxed_lambda) =
            (Verdict::Undetermined, None, None, None);
        if let Some(gs) = &gs {
            match deactivate(&sys, gs, h, tol)? {
                Deactivation::Certificate(c) => {
                    verdict = if model.unique { Verdict::Removable } else { Verdict::Candidate };
                    certificate = Some(c);
                }
                Deactivation::Impossible { phase_one_value } => {
                    verdict = Verdict::Necessary;
                    necessity_phase_one = Some(phase_one_value);
                    relaxed_lambda = relaxed_deactivate(&sys, gs, h, tol);
                }
            }
        }
        if entailment.as_ref().is_some_and(|e| e.entailed) {
            verdict = Verdict::Entailed;
        }
        let ablation = if opts.ablation {
            Some(ablate_against(tp, model, h)?)
        } else {
            None
        };
        blocks.push(BlockReport {
            id: h + 1,
            name: b.name.clone(),
            family: b.family,
            source: b.source.clone(),
            pieces: b.pieces.len(),
            active_pieces: sys.block_columns(h).iter().filter(|&&c| sys.active[c]).count(),
            verdict,
            certificate,
            necessity_phase_one,
            relaxed_lambda,
            entailment,
            ablation,
        });
    }
    let minimal_support_sets = match (&gs, opts.minimal_sets) {
        (Some(gs), true) => Some(
            minimal_support_sets(&sys, gs, opts.limit, tol)?
                .into_iter()
                .map(|set| NamedSupportSet {
                    ids: set.blocks.iter().map(|h| h + 1).collect(),
                    names: set.blocks.iter().map(|&h| tp.blocks[h].name.clone()).collect(),
                    lambda: set.lambda,
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(AnalysisReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        mode: opts.mode,
        sign: opts.sign,
        tolerances: *tol,
        alpha: model.alpha(),
        loss: model.loss,
        alpha_target: sys.target.iter().copied().collect(),
        columns: sys
            .columns
            .iter()
            .zip(&sys.active)
            .map(|(&c, &active)| {
                let col = &tp.matrix.columns[c];
                ColumnInfo {
                    label: col.label(),
                    block: col.block + 1,
                    active,
                }
            })
            .collect(),
        stationarity_residual: gs.as_ref().map(|g| g.residual),
        nullspace_dimension: gs.as_ref().map(GeneralSolution::dimension),
        unique: model.unique,
        blocks,
        minimal_support_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::ConstantPieces;
    use crate::problem::ProblemFile;
    use crate::train::assemble_problem;

    const ONE_POINT: &str = r#"{
        "domains": {"X": [{"name": "x1", "coords": [0.4, 0.3]}]},
        "predicates": [
            {"name": "p1", "domains": ["X"]},
            {"name": "p2", "domains": ["X"]},
            {"name": "p3", "domains": ["X"]}
        ],
        "supervisions": [
            {"predicate": "p1", "samples": ["x1"], "label": -1},
            {"predicate": "p2", "samples": ["x1"], "label": 1},
            {"predicate": "p3", "samples": ["x1"], "label": 1}
        ],
        "formulas": [
            "forall x: p1(x) -> p2(x)",
            "forall x: p2(x) -> p3(x)",
            "forall x: p1(x) -> p3(x)"
        ]
    }"#;

    fn one_point() -> (TrainingProblem, TrainedModel) {
        let tp = assemble_problem(&ProblemFile::from_json_str(ONE_POINT).unwrap(), ConstantPieces::Drop).unwrap();
        let m = solve_primal(&tp).unwrap();
        (tp, m)
    }

    fn close(a: &[f64], b: &[f64], eps: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= eps)
    }

    #[test]
    fn direct_sign_certificates() {
        let (tp, m) = one_point();
        let tol = Tolerances::default();
        let sys = stationarity_system(&tp, &m, AnalysisMode::All, StationaritySign::Direct);
        assert!(close(sys.target.as_slice(), &[0.0, 0.8, 0.8], 1e-9));
        let gs = solve_problem2(&sys, &tol).unwrap();
        let Deactivation::Certificate(c) = deactivate(&sys, &gs, 4, &tol).unwrap() else { panic!() };
        let mut expected = vec![0.0; 12];
        expected[9] = 0.8;
        expected[11] = 0.8;
        assert!(close(&c.lambda, &expected, 1e-9), "{:?}", c.lambda);
        let sets = minimal_support_sets(&sys, &gs, 20, &tol).unwrap();
        let ids: Vec<Vec<usize>> = sets.iter().map(|s| s.blocks.clone()).collect();
        assert_eq!(ids, vec![vec![1, 11], vec![9, 11]]);
        let mut hat = vec![0.0; 12];
        hat[1] = 0.8;
        hat[11] = 1.6;
        assert!(close(&sets[0].lambda, &hat, 1e-9));
    }

    #[test]
    fn lagrangian_sign_verdicts() {
        let (tp, m) = one_point();
        let opts = AnalysisOptions {
            ablation: true,
            entailment: true,
            minimal_sets: true,
            ..AnalysisOptions::default()
        };
        let report = removable_constraints(&tp, &m, &opts).unwrap();
        let verdict = |name: &str| report.blocks.iter().find(|b| b.name == name).unwrap().verdict;
        assert_eq!(verdict("pw:p2:x1"), Verdict::Necessary);
        // p2 = 1 and p2 <= p3 already force p3 = 1
        assert_eq!(verdict("pw:p3:x1"), Verdict::Entailed);
        assert_eq!(verdict("phi1"), Verdict::Entailed);
        assert_eq!(verdict("phi2"), Verdict::Entailed);
        let plain = removable_constraints(&tp, &m, &AnalysisOptions::default()).unwrap();
        assert_eq!(plain.blocks[5].verdict, Verdict::Removable);
        assert_eq!(plain.blocks[4].verdict, Verdict::Necessary);
        assert_eq!(plain.blocks[1].verdict, Verdict::Removable);
        let ids: Vec<Vec<usize>> = report
            .minimal_support_sets
            .unwrap()
            .iter()
            .map(|s| s.ids.clone())
            .collect();
        assert_eq!(ids, vec![vec![2, 5], vec![5, 6]]);
        for b in &report.blocks {
            let ab = b.ablation.as_ref().unwrap();
            match b.verdict {
                Verdict::Removable | Verdict::Entailed => assert!(ab.p_distance <= 1e-7, "{}", b.name),
                Verdict::Necessary => assert!(ab.loss_gap > 1e-6 || ab.p_distance > 1e-7, "{}", b.name),
                _ => {}
            }
        }
    }

    #[test]
    fn logical_mode_target() {
        let (tp, m) = one_point();
        let t = logical_coefficients(&tp, &m, AnalysisMode::Logical, StationaritySign::Lagrangian);
        let sys = stationarity_system(&tp, &m, AnalysisMode::Logical, StationaritySign::Lagrangian);
        assert_eq!(sys.len(), 3);
        let l: Vec<f64> = sys.columns.iter().map(|&c| m.multipliers[c]).collect();
        let r = &sys.matrix * DVector::from_vec(l) - &t;
        assert!(r.amax() < 1e-9);
    }

    #[test]
    fn entailment_of_transitive_law() {
        use crate::compile::compile_formula;
        use crate::grounding::{build_grounding_index, PredicateDecl, Sample, SampleSets};
        use crate::logic::parse_formula;
        let decls: Vec<PredicateDecl> = ["p1", "p2", "p3"].iter().map(|n| PredicateDecl::new(n, &["X"])).collect();
        let mut s = SampleSets::default();
        s.domains
            .insert("X".into(), vec![Sample::new("a", &[0.0]), Sample::new("b", &[1.0])]);
        let idx = build_grounding_index(&decls, &s).unwrap();
        let texts = ["forall x: p1(x) -> p2(x)", "forall x: p2(x) -> p3(x)", "forall x: p1(x) -> p3(x)"];
        let blocks: Vec<ConstraintBlock> = texts
            .iter()
            .map(|t| compile_formula(&parse_formula(t, &idx.signature()).unwrap(), &idx, "phi").unwrap())
            .collect();
        let tol = Tolerances::default();
        let e = grounded_entailment(&blocks, 2, idx.len(), EntailmentDomain::UnitCube, &tol).unwrap();
        assert!(e.entailed && !e.vacuous);
        assert!(!grounded_entailment(&blocks, 0, idx.len(), EntailmentDomain::UnitCube, &tol)
            .unwrap()
            .entailed);
        // without the cube the third law is still implied
        assert!(grounded_entailment(&blocks, 2, idx.len(), EntailmentDomain::FeasibleSet, &tol)
            .unwrap()
            .entailed);
    }

    #[test]
    fn t_bounds_and_relaxed_solution() {
        // columns: two blocks of two pieces; kernel of dimension 2
        let m = DMatrix::from_row_slice(
            6,
            6,
            &[
                1., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 1., -1., 0., 1., 0., 0., 0., 0., -1., 0., 1., 0., 0., 0.,
                0., -1., 0., -1., 0., 0., 0., 0., -1., 0., -1.,
            ],
        );
        let lstar = DVector::from_vec(vec![0.5549, 0.0, 0.0, 0.5706, 0.0, 0.0]);
        let sys = StationaritySystem::new(m.clone(), &m * &lstar, vec![0, 0, 1, 1, 2, 2], vec![true; 6]);
        let tol = Tolerances::default();
        assert_eq!(solve_problem2(&sys, &tol).unwrap().dimension(), 2);
        let gs = general_solution_from(&sys, lstar, &tol).unwrap();
        let bounds = deactivation_t_bounds(&sys, &gs, 2, &tol).unwrap().unwrap();
        for (lo, hi) in bounds {
            assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
        }
        assert!(matches!(deactivate(&sys, &gs, 0, &tol).unwrap(), Deactivation::Impossible { .. }));
        let relaxed = relaxed_deactivate(&sys, &gs, 0, &tol).unwrap();
        assert!(close(&relaxed, &[0.0, 0.0, -0.5549, 0.5706, 0.5549, 0.0], 1e-9), "{relaxed:?}");
    }

    #[test]
    fn combinations_in_order() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[4], 0), vec![Vec::<usize>::new()]);
        assert!(combinations(&[4], 2).is_empty());
    }

    #[test]
    fn zero_target_gives_empty_set() {
        let sys = StationaritySystem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            vec![0, 1],
            vec![true, true],
        );
        let tol = Tolerances::default();
        let gs = solve_problem2(&sys, &tol).unwrap();
        let sets = minimal_support_sets(&sys, &gs, 20, &tol).unwrap();
        assert_eq!(sets.len(), 1);
        assert!(sets[0].blocks.is_empty());
        assert!(matches!(
            minimal_support_sets(&sys, &gs, 1, &tol),
            Err(AnalyzeError::LimitExceeded { active: 2, limit: 1 })
        ));
    }
}
