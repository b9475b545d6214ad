//! Full verdict report for the one-sample transitive problem, under both
//! stationarity sign conventions.

use std::path::Path;

use support_constraints::analyze::{removable_constraints, AnalysisOptions, StationaritySign};
use support_constraints::compile::ConstantPieces;
use support_constraints::problem::ProblemFile;
use support_constraints::train::{assemble_problem, solve_primal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/transitive_one_point.json");
    let tp = assemble_problem(&ProblemFile::load(&path)?, ConstantPieces::Drop)?;
    let model = solve_primal(&tp)?;

    for sign in [StationaritySign::Lagrangian, StationaritySign::Direct] {
        let opts = AnalysisOptions {
            sign,
            minimal_sets: true,
            ablation: true,
            ..AnalysisOptions::default()
        };
        let report = removable_constraints(&tp, &model, &opts)?;
        println!("sign {sign:?}, target {:?}", report.alpha_target);
        for b in &report.blocks {
            println!("  {:>2} {:<10} {:?}", b.id, b.name, b.verdict);
        }
        for set in report.minimal_support_sets.unwrap_or_default() {
            println!("  minimal set {:?} with lambda {:?}", set.names, set.lambda);
        }
    }
    Ok(())
}
