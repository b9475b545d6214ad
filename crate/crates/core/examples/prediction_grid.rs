//! Trains the two-sample problem and draws the learnt `p1` over the unit
//! square as a character map.

use std::path::Path;

use support_constraints::compile::ConstantPieces;
use support_constraints::problem::ProblemFile;
use support_constraints::train::{assemble_problem, solve_primal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pair_implication.json");
    let tp = assemble_problem(&ProblemFile::load(&path)?, ConstantPieces::Drop)?;
    let model = solve_primal(&tp)?;
    let p1 = model.predicate("p1").expect("declared");
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let n = 24;
    for row in (0..n).rev() {
        let y = row as f64 / (n - 1) as f64;
        let line: String = (0..2 * n)
            .map(|col| {
                let x = col as f64 / (2 * n - 1) as f64;
                let v = p1.predict(&[x, y]).unwrap_or(0.0).clamp(0.0, 1.0);
                shades[((v * 9.0).round()) as usize]
            })
            .collect();
        println!("|{line}|");
    }
    Ok(())
}
