//! Decides grounded consequence between compiled formulas by linear
//! programming: the third transitive law follows from the first two.

use support_constraints::analyze::{grounded_entailment, EntailmentDomain};
use support_constraints::compile::compile_formula;
use support_constraints::config::Tolerances;
use support_constraints::grounding::{build_grounding_index, PredicateDecl, Sample, SampleSets};
use support_constraints::logic::parse_formula;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let decls: Vec<_> = ["p1", "p2", "p3"].iter().map(|n| PredicateDecl::new(n, &["X"])).collect();
    let mut sets = SampleSets::default();
    sets.domains.insert(
        "X".into(),
        (1..=4).map(|i| Sample::new(&format!("x{i}"), &[i as f64 / 4.0])).collect(),
    );
    let idx = build_grounding_index(&decls, &sets)?;
    let texts = [
        "forall x: p1(x) -> p2(x)",
        "forall x: p2(x) -> p3(x)",
        "forall x: p1(x) -> p3(x)",
        "forall x: p3(x) -> p1(x)",
    ];
    let mut blocks = Vec::new();
    for (i, t) in texts.iter().enumerate() {
        blocks.push(compile_formula(&parse_formula(t, &idx.signature())?, &idx, &format!("phi{}", i + 1))?);
    }

    let tol = Tolerances::default();
    // each formula against the first two laws only
    for h in 2..blocks.len() {
        let kb = [blocks[0].clone(), blocks[1].clone(), blocks[h].clone()];
        let e = grounded_entailment(&kb, 2, idx.len(), EntailmentDomain::UnitCube, &tol)?;
        let worst = e.piece_maxima.iter().flatten().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        println!("{:<28} entailed={:<5} largest piece value {worst:.3}", texts[h], e.entailed);
    }
    Ok(())
}
