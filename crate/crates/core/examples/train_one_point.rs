//! One sample, three predicates, the transitive laws and a linear kernel.
//! Trains and prints the expansion coefficients, the loss and which
//! constraint pieces are active.

use std::path::Path;

use support_constraints::compile::ConstantPieces;
use support_constraints::problem::ProblemFile;
use support_constraints::train::{assemble_problem, solve_primal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/transitive_one_point.json");
    let tp = assemble_problem(&ProblemFile::load(&path)?, ConstantPieces::Drop)?;
    println!("Gram of p1: {}", tp.grams[0][(0, 0)]);

    let model = solve_primal(&tp)?;
    println!("alpha = {:?}", model.alpha());
    println!("loss  = {}", model.loss);
    println!("unique optimum: {}", model.unique);
    for (c, col) in tp.matrix.columns.iter().enumerate() {
        println!(
            "  {:>2} {:<10} active={:<5} multiplier={:.6}",
            c + 1,
            tp.blocks[col.block].name,
            model.active[c],
            model.multipliers[c]
        );
    }
    println!("p1(0.2, 0.9) = {:.6}", model.predict("p1", &[0.2, 0.9])?);
    Ok(())
}
