//! The stationarity system of the transitive laws on two samples: kernel of
//! M, the family of multiplier vectors reproducing a given alpha, and which
//! blocks can be switched off.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use support_constraints::analyze::{
    deactivate, deactivation_t_bounds, general_solution_from, relaxed_deactivate, Deactivation, StationaritySystem,
};
use support_constraints::compile::{assemble_matrix, ConstantPieces, Family};
use support_constraints::config::Tolerances;
use support_constraints::problem::ProblemFile;
use support_constraints::solver::linalg::nullspace;
use support_constraints::train::assemble_problem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/transitive_two_points.json");
    let tp = assemble_problem(&ProblemFile::load(&path)?, ConstantPieces::Drop)?;
    let logical: Vec<_> = tp.blocks.iter().filter(|b| b.family == Family::Logical).cloned().collect();
    let cm = assemble_matrix(&logical, tp.coords(), ConstantPieces::Drop)?;
    let m = DMatrix::from_fn(tp.coords(), cm.len(), |r, c| cm.columns[c].coeffs.get(r));
    println!("M ={m}");

    let tol = Tolerances::default();
    let ker = nullspace(&m, tol.nullspace);
    println!("dim Ker(M) = {}", ker.ncols());

    let lstar = DVector::from_vec(vec![0.5549, 0.0, 0.0, 0.5706, 0.0, 0.0]);
    println!("M lambda* = {}", (&m * &lstar).transpose());
    let blocks = cm.columns.iter().map(|c| c.block).collect();
    let sys = StationaritySystem::new(m.clone(), &m * &lstar, blocks, vec![true; cm.len()]);
    let gs = general_solution_from(&sys, lstar, &tol)?;

    for (h, block) in logical.iter().enumerate() {
        let name = &block.name;
        match deactivate(&sys, &gs, h, &tol)? {
            Deactivation::Certificate(c) => println!("{name}: certificate {:?}", c.lambda),
            Deactivation::Impossible { phase_one_value } => {
                println!("{name}: no lambda >= 0 avoids it (phase one {phase_one_value:.4})");
                if let Some(r) = relaxed_deactivate(&sys, &gs, h, &tol) {
                    println!("      sign-free solution {r:?}");
                }
            }
        }
        if let Some(bounds) = deactivation_t_bounds(&sys, &gs, h, &tol)? {
            println!("      t ranges {bounds:?}");
        }
    }
    Ok(())
}
