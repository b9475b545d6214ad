//! Retrains without one block at a time and compares the optima.

use std::path::Path;

use support_constraints::analyze::ablate_against;
use support_constraints::compile::ConstantPieces;
use support_constraints::problem::ProblemFile;
use support_constraints::train::{assemble_problem, solve_primal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "transitive_two_points".into());
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/{name}.json"));
    let tp = assemble_problem(&ProblemFile::load(&path)?, ConstantPieces::Drop)?;
    let full = solve_primal(&tp)?;
    println!("full loss {:.6}", full.loss);
    for h in 0..tp.blocks.len() {
        let a = ablate_against(&tp, &full, h)?;
        println!(
            "  without {:<12} loss {:.6}  |dp| {:.2e}  still feasible: {}",
            a.block, a.loss_ablated, a.p_distance, a.ablated_feasible_for_full
        );
    }
    Ok(())
}
