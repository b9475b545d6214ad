//! Seeded generators of feasible problems and the soundness check run on
//! them.
//!
//! Problems are built around a hidden Boolean assignment: only formulas it
//! satisfies are kept and supervisions are drawn from it, so the constraints
//! are always jointly satisfiable.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::analyze::{removable_constraints, AnalysisOptions, AnalyzeError, Verdict};
use crate::compile::ConstantPieces;
use crate::grounding::{PredicateDecl, Sample, Supervision};
use crate::kernels::KernelSpec;
use crate::problem::{ProblemFile, ProblemOptions};
use crate::train::{assemble_problem, solve_primal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomConfig {
    pub predicates: usize,
    pub samples: usize,
    /// Formula templates tried; unsatisfied ones are discarded.
    pub formula_attempts: usize,
    pub supervision_rate: f64,
    pub sigma: f64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            predicates: 3,
            samples: 3,
            formula_attempts: 5,
            supervision_rate: 0.5,
            sigma: 0.4,
        }
    }
}

/// Points in the unit square at pairwise distance at least `min_dist` (when
/// the rejection sampler manages within a bounded number of tries).
fn spread_points<R: Rng>(rng: &mut R, n: usize, min_dist: f64) -> Vec<Sample> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut tries = 0;
    while pts.len() < n {
        let c = [rng.random::<f64>(), rng.random::<f64>()];
        tries += 1;
        let far = pts
            .iter()
            .all(|q| ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2)).sqrt() >= min_dist);
        if far || tries > 1000 {
            pts.push(c);
        }
    }
    pts.iter()
        .enumerate()
        .map(|(i, c)| Sample::new(&format!("x{}", i + 1), c))
        .collect()
}

fn base_problem(names: &[String], samples: Vec<Sample>, sigma: f64) -> ProblemFile {
    ProblemFile {
        domains: BTreeMap::from([("X".to_string(), samples)]),
        kernels: BTreeMap::from([("rbf".to_string(), KernelSpec::Rbf { sigma })]),
        default_kernel: Some("rbf".into()),
        predicates: names.iter().map(|n| PredicateDecl::new(n, &["X"])).collect(),
        supervisions: vec![],
        formulas: vec![],
        options: ProblemOptions::default(),
    }
}

fn supervise<R: Rng>(rng: &mut R, problem: &mut ProblemFile, truth: &[Vec<bool>], rate: f64) {
    let samples: Vec<String> = problem.domains["X"].iter().map(|s| s.name.clone()).collect();
    for (j, decl) in problem.predicates.iter().enumerate() {
        for (x, name) in samples.iter().enumerate() {
            if rng.random::<f64>() < rate {
                let label = if truth[j][x] { 1 } else { -1 };
                problem
                    .supervisions
                    .push(Supervision::new(&decl.name, &[name.as_str()], label));
            }
        }
    }
    if problem.supervisions.is_empty() {
        let j = rng.random_range(0..truth.len());
        let x = rng.random_range(0..samples.len());
        let label = if truth[j][x] { 1 } else { -1 };
        let name = problem.predicates[j].name.clone();
        problem.supervisions.push(Supervision::new(&name, &[samples[x].as_str()], label));
    }
}

/// A random unary problem with rbf kernels on spread-out points.
pub fn random_problem<R: Rng>(rng: &mut R, cfg: &RandomConfig) -> ProblemFile {
    let names: Vec<String> = (1..=cfg.predicates).map(|j| format!("p{j}")).collect();
    let n = cfg.samples;
    let mut problem = base_problem(&names, spread_points(rng, n, 0.15), cfg.sigma);
    let truth: Vec<Vec<bool>> = (0..names.len())
        .map(|_| (0..n).map(|_| rng.random::<bool>()).collect())
        .collect();

    for _ in 0..cfg.formula_attempts {
        let mut pick: Vec<usize> = (0..names.len()).collect();
        pick.shuffle(rng);
        let (a, b) = (pick[0], pick[1 % pick.len()]);
        let c = pick[2 % pick.len()];
        let kind = rng.random_range(0..5);
        let (ta, tb, tc) = (&truth[a], &truth[b], &truth[c]);
        let holds = |x: usize| match kind {
            0 => !ta[x] || tb[x],
            1 => !(ta[x] && tb[x]) || tc[x],
            2 => !ta[x] || (tb[x] && tc[x]),
            3 => ta[x] || tb[x],
            _ => !ta[x] || !tb[x],
        };
        let (na, nb, nc) = (&names[a], &names[b], &names[c]);
        let text = match kind {
            0 => format!("forall x: {na}(x) -> {nb}(x)"),
            1 => format!("forall x: ({na}(x) * {nb}(x)) -> {nc}(x)"),
            2 => format!("forall x: {na}(x) -> ({nb}(x) & {nc}(x))"),
            3 => format!("forall x: {na}(x) + {nb}(x)"),
            _ => format!("forall x: ~{na}(x) + ~{nb}(x)"),
        };
        if (0..n).all(holds) && !problem.formulas.contains(&text) {
            problem.formulas.push(text);
        }
    }
    supervise(rng, &mut problem, &truth, cfg.supervision_rate);
    problem
}

/// The three transitive laws over `p1, p2, p3` on `samples` random points;
/// supervisions follow a hidden chain `p1 <= p2 <= p3`.
pub fn transitive_problem<R: Rng>(rng: &mut R, samples: usize, supervision_rate: f64) -> ProblemFile {
    let names: Vec<String> = ["p1", "p2", "p3"].iter().map(|s| s.to_string()).collect();
    let mut problem = base_problem(&names, spread_points(rng, samples, 0.15), 0.4);
    problem.formulas = vec![
        "forall x: p1(x) -> p2(x)".into(),
        "forall x: p2(x) -> p3(x)".into(),
        "forall x: p1(x) -> p3(x)".into(),
    ];
    let levels: Vec<usize> = (0..samples).map(|_| rng.random_range(0..4)).collect();
    let truth: Vec<Vec<bool>> = (0..3)
        .map(|j| levels.iter().map(|&l| l + j >= 3).collect())
        .collect();
    supervise(rng, &mut problem, &truth, supervision_rate);
    problem
}

/// One failed soundness expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub block: String,
    pub verdict: Verdict,
    pub loss_gap: f64,
    pub p_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessSummary {
    pub blocks: usize,
    pub removable: usize,
    pub entailed: usize,
    pub necessary: usize,
    pub violations: Vec<Violation>,
}

/// Trains, analyzes with ablation, and checks every verdict against its
/// ablation: removable blocks keep `p*` (within 1e-7), entailed blocks keep
/// the loss (within 1e-8), necessary blocks change the optimum.
pub fn check_soundness(problem: &ProblemFile, opts: &AnalysisOptions) -> Result<SoundnessSummary, AnalyzeError> {
    let tp = assemble_problem(problem, ConstantPieces::Drop)?;
    let model = solve_primal(&tp)?;
    let report = removable_constraints(
        &tp,
        &model,
        &AnalysisOptions {
            ablation: true,
            ..*opts
        },
    )?;
    let mut s = SoundnessSummary {
        blocks: report.blocks.len(),
        removable: 0,
        entailed: 0,
        necessary: 0,
        violations: vec![],
    };
    for b in &report.blocks {
        let ab = b.ablation.as_ref().expect("ablation requested");
        let ok = match b.verdict {
            Verdict::Removable => {
                s.removable += 1;
                ab.p_distance <= 1e-7
            }
            Verdict::Entailed => {
                s.entailed += 1;
                ab.loss_gap.abs() <= 1e-8
            }
            Verdict::Necessary => {
                s.necessary += 1;
                ab.loss_gap > 1e-6 || ab.p_distance > 1e-7
            }
            Verdict::Candidate | Verdict::Undetermined => true,
        };
        if !ok {
            s.violations.push(Violation {
                block: b.name.clone(),
                verdict: b.verdict,
                loss_gap: ab.loss_gap,
                p_distance: ab.p_distance,
            });
        }
    }
    Ok(s)
}
