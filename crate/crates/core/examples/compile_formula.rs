//! Compiles `forall x: forall y: (p1(x) * p1(y)) -> p2(x,y)` on two samples
//! and prints every piece of the resulting constraint block.

use support_constraints::compile::{assemble_matrix, compile_formula, ConstantPieces};
use support_constraints::grounding::{build_grounding_index, PredicateDecl, Sample, SampleSets};
use support_constraints::logic::parse_formula;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let decls = [PredicateDecl::new("p1", &["X"]), PredicateDecl::new("p2", &["X", "X"])];
    let mut sets = SampleSets::default();
    sets.domains.insert(
        "X".into(),
        vec![Sample::new("x1", &[0.25, 0.75]), Sample::new("x2", &[0.75, 0.25])],
    );
    let idx = build_grounding_index(&decls, &sets)?;
    let f = parse_formula("forall x: forall y: (p1(x) * p1(y)) -> p2(x,y)", &idx.signature())?;
    let block = compile_formula(&f, &idx, "phi1")?;

    let names: Vec<String> = (0..idx.len()).map(|k| idx.coord_name(k)).collect();
    println!("coordinates: {}", names.join(" "));
    println!("{} pieces", block.pieces.len());
    for (i, piece) in block.pieces.iter().enumerate() {
        println!("  {}: M = {:?}, q = {}", i + 1, piece.coeffs.to_dense(idx.len()), piece.offset);
    }

    let m = assemble_matrix(std::slice::from_ref(&block), idx.len(), ConstantPieces::Keep)?;
    print!("{}", m.to_csv(&idx));
    Ok(())
}
