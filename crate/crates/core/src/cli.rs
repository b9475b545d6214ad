//! Command-line front end. Each subcommand reads one problem (or model) file
//! and writes its outputs into a directory.
//!
//! Exit codes: 0 success, 1 internal failure, 2 input error, 3 infeasible
//! constraints, 4 resource guard (search limit or iteration cap).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::analyze::{
    ablate_and_compare, removable_constraints, AnalysisMode, AnalysisOptions, AnalyzeError, StationaritySign, Verdict,
};
use crate::compile::{assemble_matrix, fmt_value, ConstantPieces, Family};
use crate::config::Tolerances;
use crate::kernels::Definiteness;
use crate::problem::{ProblemError, ProblemFile};
use crate::random::{check_soundness, random_problem, RandomConfig};
use crate::solver::{KktResiduals, SolverError};
use crate::train::{assemble_problem, solve_primal, PredicateModel, TrainError, TrainingProblem};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "support-constraints", version, about = "Train kernel machines under Łukasiewicz constraints and find the unnecessary ones")]
pub struct Cli {
    #[command(flatten)]
    pub tolerances: TolArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for the tolerances in the problem file.
#[derive(Debug, Default, Args)]
pub struct TolArgs {
    #[arg(long, global = true)]
    pub tol_qp: Option<f64>,
    #[arg(long, global = true)]
    pub tol_feasibility: Option<f64>,
    #[arg(long, global = true)]
    pub tol_lp: Option<f64>,
    #[arg(long, global = true)]
    pub tol_nullspace: Option<f64>,
    #[arg(long, global = true)]
    pub tol_activity: Option<f64>,
    #[arg(long, global = true)]
    pub tol_entailment: Option<f64>,
    #[arg(long, global = true)]
    pub tol_residual: Option<f64>,
    #[arg(long, global = true)]
    pub tol_definiteness: Option<f64>,
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
}

impl TolArgs {
    fn apply(&self, t: &mut Tolerances) {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut t.qp, self.tol_qp);
        set(&mut t.feasibility, self.tol_feasibility);
        set(&mut t.lp, self.tol_lp);
        set(&mut t.nullspace, self.tol_nullspace);
        set(&mut t.activity, self.tol_activity);
        set(&mut t.entailment, self.tol_entailment);
        set(&mut t.residual, self.tol_residual);
        set(&mut t.definiteness, self.tol_definiteness);
        if let Some(n) = self.max_iterations {
            t.max_iterations = n;
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    All,
    Logical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignArg {
    Lagrangian,
    Direct,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the constraint matrix M (with offsets q) and the block manifest.
    Compile {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only the knowledge-base formulas.
        #[arg(long)]
        logical_only: bool,
        /// Keep always-satisfied constant pieces as zero columns.
        #[arg(long)]
        keep_constant_pieces: bool,
    },
    /// Solve the training problem; writes model.json and train_report.json.
    Train {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Train one free bias per predicate.
        #[arg(long)]
        bias: bool,
    },
    /// Train, then classify every constraint block; writes analysis.json.
    Analyze {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "lagrangian")]
        sign: SignArg,
        #[arg(long)]
        minimal_sets: bool,
        #[arg(long)]
        entailment: bool,
        /// Skip re-training without each block.
        #[arg(long)]
        no_ablation: bool,
        /// Largest number of active blocks for the minimal-set search.
        #[arg(long, default_value_t = 20)]
        limit: usize,
        #[arg(long)]
        bias: bool,
    },
    /// Compare the optimum with and without one block; writes ablation.json.
    Ablate {
        problem: PathBuf,
        /// Block name, e.g. `phi3` or `pw:p2:x1`, or its 1-based number.
        #[arg(long)]
        drop: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bias: bool,
    },
    /// Evaluate a trained predicate on a rectangular grid (CSV).
    PredictGrid {
        model: PathBuf,
        #[arg(long)]
        predicate: String,
        #[arg(long, default_value = "0,1", value_parser = parse_range)]
        x_range: (f64, f64),
        #[arg(long, default_value = "0,1", value_parser = parse_range)]
        y_range: (f64, f64),
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every verdict against ablation on seeded random problems.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err("need finite lo <= hi".into());
    }
    Ok((lo, hi))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Internal(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Guard(_) => 4,
            CliError::Internal(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::IterationLimit(_) => CliError::Guard(e.to_string()),
            SolverError::Shape(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            TrainError::Solver(s) => s.into(),
            TrainError::Unbounded => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<AnalyzeError> for CliError {
    fn from(e: AnalyzeError) -> Self {
        match e {
            AnalyzeError::Train(t) => t.into(),
            AnalyzeError::Solver(s) => s.into(),
            AnalyzeError::LimitExceeded { .. } => CliError::Guard(e.to_string()),
            AnalyzeError::UnknownBlock(_) => CliError::Input(e.to_string()),
            AnalyzeError::Inconsistent { .. } => CliError::Internal(e.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(path: &Path, tol: &TolArgs, bias: bool) -> Result<ProblemFile, CliError> {
    let mut p = ProblemFile::load(path)?;
    tol.apply(&mut p.options.tolerances);
    p.options.bias |= bias;
    Ok(p)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    write(path, &s)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let tol = &cli.tolerances;
    match &cli.command {
        Command::Compile {
            problem,
            out,
            logical_only,
            keep_constant_pieces,
        } => cmd_compile(&load(problem, tol, false)?, out, *logical_only, *keep_constant_pieces),
        Command::Train { problem, out, bias } => cmd_train(&load(problem, tol, *bias)?, out),
        Command::Analyze {
            problem,
            out,
            mode,
            sign,
            minimal_sets,
            entailment,
            no_ablation,
            limit,
            bias,
        } => {
            let opts = AnalysisOptions {
                mode: match mode {
                    ModeArg::All => AnalysisMode::All,
                    ModeArg::Logical => AnalysisMode::Logical,
                },
                sign: match sign {
                    SignArg::Lagrangian => StationaritySign::Lagrangian,
                    SignArg::Direct => StationaritySign::Direct,
                },
                entailment: *entailment,
                minimal_sets: *minimal_sets,
                ablation: !no_ablation,
                limit: *limit,
            };
            cmd_analyze(&load(problem, tol, *bias)?, out, &opts)
        }
        Command::Ablate {
            problem,
            drop,
            out,
            bias,
        } => cmd_ablate(&load(problem, tol, *bias)?, drop, out),
        Command::PredictGrid {
            model,
            predicate,
            x_range,
            y_range,
            steps,
            out,
        } => cmd_predict_grid(model, predicate, *x_range, *y_range, *steps, out),
        Command::Selfcheck { seed, cases, out } => cmd_selfcheck(*seed, *cases, out.as_deref()),
    }
}

#[derive(Serialize)]
struct BlockEntry<'a> {
    id: usize,
    name: &'a str,
    family: Family,
    pieces: usize,
    source: &'a str,
    columns: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    coordinates: Vec<String>,
    constant_pieces: ConstantPieces,
    blocks: Vec<BlockEntry<'a>>,
}

pub fn cmd_compile(problem: &ProblemFile, out: &Path, logical_only: bool, keep: bool) -> Result<(), CliError> {
    let constants = if keep { ConstantPieces::Keep } else { ConstantPieces::Drop };
    let tp = assemble_problem(problem, constants)?;
    let blocks: Vec<_> = if logical_only {
        tp.blocks.iter().filter(|b| b.family == Family::Logical).cloned().collect()
    } else {
        tp.blocks.clone()
    };
    let matrix = assemble_matrix(&blocks, tp.coords(), constants).map_err(TrainError::from)?;
    write(&out.join("M.csv"), &matrix.to_csv(&tp.index))?;
    let manifest = Manifest {
        tool_version: VERSION,
        coordinates: (0..tp.coords()).map(|k| tp.index.coord_name(k)).collect(),
        constant_pieces: constants,
        blocks: blocks
            .iter()
            .enumerate()
            .map(|(h, b)| BlockEntry {
                id: h + 1,
                name: &b.name,
                family: b.family,
                pieces: b.pieces.len(),
                source: &b.source,
                columns: matrix
                    .block_columns(h)
                    .iter()
                    .map(|&c| matrix.columns[c].label())
                    .collect(),
            })
            .collect(),
    };
    write_json(&out.join("blocks.json"), &manifest)?;
    println!(
        "{} coordinates, {} blocks, {} columns -> {}",
        tp.coords(),
        blocks.len(),
        matrix.len(),
        out.display()
    );
    Ok(())
}

/// Exported model: enough to reload and predict bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub tool_version: String,
    pub predicates: Vec<PredicateModel>,
}

#[derive(Serialize)]
struct PieceEntry {
    label: String,
    block: String,
    value: f64,
    active: bool,
    multiplier: f64,
}

#[derive(Serialize)]
struct DefEntry {
    predicate: String,
    #[serde(flatten)]
    definiteness: Definiteness,
}

#[derive(Serialize)]
struct TrainReport {
    tool_version: &'static str,
    tolerances: Tolerances,
    bias: bool,
    loss: f64,
    coordinates: Vec<String>,
    alpha: Vec<f64>,
    biases: Vec<f64>,
    p: Vec<f64>,
    max_violation: f64,
    unique: bool,
    definiteness: Vec<DefEntry>,
    kkt: KktResiduals,
    iterations: usize,
    pieces: Vec<PieceEntry>,
}

fn train_report(tp: &TrainingProblem, m: &crate::train::TrainedModel) -> TrainReport {
    TrainReport {
        tool_version: VERSION,
        tolerances: tp.tolerances,
        bias: tp.bias,
        loss: m.loss,
        coordinates: (0..tp.coords()).map(|k| tp.index.coord_name(k)).collect(),
        alpha: m.alpha(),
        biases: m.predicates.iter().map(|p| p.bias).collect(),
        p: m.p.clone(),
        max_violation: m.max_violation(&tp.matrix),
        unique: m.unique,
        definiteness: m
            .predicates
            .iter()
            .zip(&m.definiteness)
            .map(|(p, d)| DefEntry {
                predicate: p.name.clone(),
                definiteness: *d,
            })
            .collect(),
        kkt: m.kkt,
        iterations: m.iterations,
        pieces: tp
            .matrix
            .columns
            .iter()
            .enumerate()
            .map(|(c, col)| PieceEntry {
                label: col.label(),
                block: tp.blocks[col.block].name.clone(),
                value: col.coeffs.dot(&m.p) + col.offset,
                active: m.active[c],
                multiplier: m.multipliers[c],
            })
            .collect(),
    }
}

pub fn cmd_train(problem: &ProblemFile, out: &Path) -> Result<(), CliError> {
    let tp = assemble_problem(problem, ConstantPieces::Drop)?;
    let m = solve_primal(&tp)?;
    write_json(
        &out.join("model.json"),
        &ModelFile {
            tool_version: VERSION.into(),
            predicates: m.predicates.clone(),
        },
    )?;
    write_json(&out.join("train_report.json"), &train_report(&tp, &m))?;
    println!("loss {}", fmt_value(m.loss));
    for (k, v) in m.p.iter().enumerate() {
        println!("  {:<16} {}", tp.index.coord_name(k), fmt_value(*v));
    }
    Ok(())
}

pub fn cmd_analyze(problem: &ProblemFile, out: &Path, opts: &AnalysisOptions) -> Result<(), CliError> {
    let tp = assemble_problem(problem, ConstantPieces::Drop)?;
    let m = solve_primal(&tp)?;
    let report = removable_constraints(&tp, &m, opts)?;
    write_json(&out.join("analysis.json"), &report)?;
    for b in &report.blocks {
        let verdict = match b.verdict {
            Verdict::Entailed => "entailed",
            Verdict::Removable => "removable",
            Verdict::Candidate => "candidate",
            Verdict::Necessary => "necessary",
            Verdict::Undetermined => "undetermined",
        };
        println!("{:>3} {:<16} {:<12} {}", b.id, b.name, verdict, b.source);
    }
    if let Some(sets) = &report.minimal_support_sets {
        for s in sets {
            println!("minimal support set: {{{}}}", s.names.join(", "));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AblationFile {
    tool_version: &'static str,
    tolerances: Tolerances,
    #[serde(flatten)]
    ablation: crate::analyze::Ablation,
}

fn find_block(tp: &TrainingProblem, key: &str) -> Result<usize, CliError> {
    if let Some(h) = tp.block_index(key) {
        return Ok(h);
    }
    match key.parse::<usize>() {
        Ok(n) if (1..=tp.blocks.len()).contains(&n) => Ok(n - 1),
        _ => Err(AnalyzeError::UnknownBlock(key.to_string()).into()),
    }
}

pub fn cmd_ablate(problem: &ProblemFile, drop: &str, out: &Path) -> Result<(), CliError> {
    let tp = assemble_problem(problem, ConstantPieces::Drop)?;
    let h = find_block(&tp, drop)?;
    let ablation = ablate_and_compare(&tp, h)?;
    println!(
        "{}: loss {} -> {}, |dp| {}, ablated optimum {} the full constraints",
        ablation.block,
        fmt_value(ablation.loss_full),
        fmt_value(ablation.loss_ablated),
        fmt_value(ablation.p_distance),
        if ablation.ablated_feasible_for_full { "satisfies" } else { "violates" }
    );
    write_json(
        &out.join("ablation.json"),
        &AblationFile {
            tool_version: VERSION,
            tolerances: tp.tolerances,
            ablation,
        },
    )
}

pub fn cmd_predict_grid(
    model: &Path,
    predicate: &str,
    x: (f64, f64),
    y: (f64, f64),
    steps: usize,
    out: &Path,
) -> Result<(), CliError> {
    let text = fs::read_to_string(model).map_err(|e| CliError::Input(format!("{}: {e}", model.display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", model.display())))?;
    let pm = file
        .predicates
        .iter()
        .find(|p| p.name == predicate)
        .ok_or_else(|| CliError::Input(format!("unknown predicate `{predicate}`")))?;
    let dim = pm.inputs.first().map_or(0, Vec::len);
    if !(1..=2).contains(&dim) || steps == 0 {
        return Err(CliError::Input(format!(
            "grid needs a predicate on 1 or 2 input dimensions and steps >= 1 (got {dim} and {steps})"
        )));
    }
    let axis = |(lo, hi): (f64, f64), i: usize| {
        if steps == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (steps - 1) as f64
        }
    };
    let mut points = Vec::new();
    for i in 0..steps {
        if dim == 1 {
            points.push(vec![axis(x, i)]);
        } else {
            for j in 0..steps {
                points.push(vec![axis(x, i), axis(y, j)]);
            }
        }
    }
    let values = pm.predict_many(&points)?;
    let mut csv = String::from(if dim == 1 { "x,value\n" } else { "x,y,value\n" });
    for (pt, v) in points.iter().zip(values) {
        let coords: Vec<String> = pt.iter().map(|c| fmt_value(*c)).collect();
        csv.push_str(&format!("{},{}\n", coords.join(","), fmt_value(v)));
    }
    write(out, &csv)
}

#[derive(Serialize)]
struct SelfcheckCase {
    case: usize,
    formulas: usize,
    summary: crate::random::SoundnessSummary,
}

pub fn cmd_selfcheck(seed: u64, cases: usize, out: Option<&Path>) -> Result<(), CliError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(cases);
    let mut failures = 0;
    for case in 0..cases {
        let cfg = RandomConfig {
            predicates: rng.random_range(2..=4),
            samples: rng.random_range(1..=5),
            formula_attempts: rng.random_range(1..=8),
            ..RandomConfig::default()
        };
        let problem = random_problem(&mut rng, &cfg);
        let opts = AnalysisOptions {
            entailment: case % 2 == 0,
            ..AnalysisOptions::default()
        };
        let summary = check_soundness(&problem, &opts)?;
        println!(
            "case {case:>3}: {} blocks, {} removable, {} entailed, {} necessary, {} violation(s)",
            summary.blocks,
            summary.removable,
            summary.entailed,
            summary.necessary,
            summary.violations.len()
        );
        if !summary.violations.is_empty() {
            failures += 1;
        }
        records.push(SelfcheckCase {
            case,
            formulas: problem.formulas.len(),
            summary,
        });
    }
    if let Some(path) = out {
        write_json(path, &records)?;
    }
    if failures > 0 {
        return Err(CliError::Internal(format!("{failures} case(s) violated a verdict")));
    }
    Ok(())
}
