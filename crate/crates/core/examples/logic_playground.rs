//! Parses formulas, puts them in negation normal form, checks the convex
//! fragment and evaluates them on a valuation.

use support_constraints::logic::{
    check_concave_fragment, eval_lukasiewicz, parse_formula, to_nnf, GroundAtom, Signature, Valuation,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sig = Signature::new().with("a", 1).with("b", 1).with("c", 1);
    let mut v = Valuation::new(vec!["s".into()]);
    v.set(GroundAtom::new("a", &["s"]), 0.7);
    v.set(GroundAtom::new("b", &["s"]), 0.4);
    v.set(GroundAtom::new("c", &["s"]), 0.9);

    for text in [
        "a(s) -> b(s)",
        "a(s) * b(s) -> c(s)",
        "~(a(s) * ~c(s)) & b(s)",
        "a(s) | b(s)",
        "forall x: a(x) + ~b(x)",
    ] {
        let f = parse_formula(text, &sig)?;
        let nnf = to_nnf(&f)?;
        let report = check_concave_fragment(&nnf);
        println!(
            "{:<26} nnf {:<32} convex: {:<5} value {:.2}",
            text,
            nnf.to_formula().to_string(),
            report.is_concave_fragment,
            eval_lukasiewicz(&f, &v)?
        );
    }
    Ok(())
}
