use std::fmt;

use super::{Atom, Formula, LogicError};

/// A formula in negation normal form: negation only on atoms, no implication.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Nnf {
    Literal { atom: Atom, positive: bool },
    StrongConj(Box<Nnf>, Box<Nnf>),
    StrongDisj(Box<Nnf>, Box<Nnf>),
    WeakConj(Box<Nnf>, Box<Nnf>),
    WeakDisj(Box<Nnf>, Box<Nnf>),
    Forall(String, Box<Nnf>),
}

impl Nnf {
    pub fn to_formula(&self) -> Formula {
        match self {
            Nnf::Literal { atom, positive } => {
                let a = Formula::Atom(atom.clone());
                if *positive {
                    a
                } else {
                    Formula::negation(a)
                }
            }
            Nnf::StrongConj(a, b) => Formula::strong_conj(a.to_formula(), b.to_formula()),
            Nnf::StrongDisj(a, b) => Formula::strong_disj(a.to_formula(), b.to_formula()),
            Nnf::WeakConj(a, b) => Formula::weak_conj(a.to_formula(), b.to_formula()),
            Nnf::WeakDisj(a, b) => Formula::weak_disj(a.to_formula(), b.to_formula()),
            Nnf::Forall(v, body) => Formula::forall(v, body.to_formula()),
        }
    }

    fn connective(&self) -> &'static str {
        match self {
            Nnf::Literal { .. } => "literal",
            Nnf::StrongConj(..) => "strong conjunction (*)",
            Nnf::StrongDisj(..) => "strong disjunction (+)",
            Nnf::WeakConj(..) => "weak conjunction (&)",
            Nnf::WeakDisj(..) => "weak disjunction (|)",
            Nnf::Forall(..) => "forall",
        }
    }
}

impl fmt::Display for Nnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_formula().fmt(f)
    }
}

/// Rewrites `a -> b` to `~a + b` and pushes negations to the atoms using the
/// dualities `* <-> +` and `& <-> |`.
pub fn to_nnf(f: &Formula) -> Result<Nnf, LogicError> {
    convert(f, true)
}

fn convert(f: &Formula, positive: bool) -> Result<Nnf, LogicError> {
    let pair = |a: &Formula, pa: bool, b: &Formula, pb: bool| -> Result<(Box<Nnf>, Box<Nnf>), LogicError> {
        Ok((Box::new(convert(a, pa)?), Box::new(convert(b, pb)?)))
    };
    Ok(match (f, positive) {
        (Formula::Atom(a), _) => Nnf::Literal {
            atom: a.clone(),
            positive,
        },
        (Formula::Neg(a), _) => convert(a, !positive)?,
        (Formula::StrongConj(a, b), true) | (Formula::StrongDisj(a, b), false) => {
            let (x, y) = pair(a, positive, b, positive)?;
            Nnf::StrongConj(x, y)
        }
        (Formula::StrongDisj(a, b), true) | (Formula::StrongConj(a, b), false) => {
            let (x, y) = pair(a, positive, b, positive)?;
            Nnf::StrongDisj(x, y)
        }
        (Formula::WeakConj(a, b), true) | (Formula::WeakDisj(a, b), false) => {
            let (x, y) = pair(a, positive, b, positive)?;
            Nnf::WeakConj(x, y)
        }
        (Formula::WeakDisj(a, b), true) | (Formula::WeakConj(a, b), false) => {
            let (x, y) = pair(a, positive, b, positive)?;
            Nnf::WeakDisj(x, y)
        }
        // a -> b == ~a + b, and ~(a -> b) == a * ~b
        (Formula::Implies(a, b), true) => {
            let (x, y) = pair(a, false, b, true)?;
            Nnf::StrongDisj(x, y)
        }
        (Formula::Implies(a, b), false) => {
            let (x, y) = pair(a, true, b, false)?;
            Nnf::StrongConj(x, y)
        }
        (Formula::Forall(v, body), true) => Nnf::Forall(v.clone(), Box::new(convert(body, true)?)),
        (Formula::Forall(v, _), false) => return Err(LogicError::NegatedQuantifier(v.clone())),
    })
}

/// Outcome of the concave-fragment check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentReport {
    pub is_concave_fragment: bool,
    /// Child-index path from the root to the first offending node.
    pub offending_path: Option<Vec<usize>>,
    pub offending_connective: Option<&'static str>,
}

/// A formula in NNF is in the concave fragment iff every internal node is a
/// weak conjunction, a strong disjunction or a universal quantifier.
pub fn check_concave_fragment(f: &Nnf) -> FragmentReport {
    fn walk(f: &Nnf, path: &mut Vec<usize>) -> Option<(Vec<usize>, &'static str)> {
        match f {
            Nnf::Literal { .. } => None,
            Nnf::WeakConj(a, b) | Nnf::StrongDisj(a, b) => {
                for (i, child) in [a, b].into_iter().enumerate() {
                    path.push(i);
                    let r = walk(child, path);
                    path.pop();
                    if r.is_some() {
                        return r;
                    }
                }
                None
            }
            Nnf::Forall(_, body) => {
                path.push(0);
                let r = walk(body, path);
                path.pop();
                r
            }
            Nnf::StrongConj(..) | Nnf::WeakDisj(..) => Some((path.clone(), f.connective())),
        }
    }
    match walk(f, &mut Vec::new()) {
        None => FragmentReport {
            is_concave_fragment: true,
            offending_path: None,
            offending_connective: None,
        },
        Some((path, conn)) => FragmentReport {
            is_concave_fragment: false,
            offending_path: Some(path),
            offending_connective: Some(conn),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_lukasiewicz, parse_formula, GroundAtom, Signature, Valuation};

    fn sig() -> Signature {
        Signature::new().with("a", 1).with("b", 1).with("c", 1)
    }

    fn nnf(text: &str) -> Nnf {
        to_nnf(&parse_formula(text, &sig()).unwrap()).unwrap()
    }

    #[test]
    fn de_morgan_on_strong_conjunction() {
        assert_eq!(nnf("~(a(s) * b(s)) + c(s)").to_string(), "~a(s) + ~b(s) + c(s)");
    }

    #[test]
    fn implication_elimination() {
        assert_eq!(nnf("(a(s) * b(s)) -> c(s)").to_string(), "~a(s) + ~b(s) + c(s)");
    }

    #[test]
    fn implication_elimination_agrees_on_grid() {
        let f = parse_formula("(a(s) * b(s)) -> c(s)", &sig()).unwrap();
        let g = to_nnf(&f).unwrap().to_formula();
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    let mut v = Valuation::new(vec!["s".into()]);
                    v.set(GroundAtom::new("a", &["s"]), i as f64 / 9.0);
                    v.set(GroundAtom::new("b", &["s"]), j as f64 / 9.0);
                    v.set(GroundAtom::new("c", &["s"]), k as f64 / 9.0);
                    let x = eval_lukasiewicz(&f, &v).unwrap();
                    let y = eval_lukasiewicz(&g, &v).unwrap();
                    assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn double_negation() {
        assert_eq!(nnf("~~a(s)").to_string(), "a(s)");
    }

    #[test]
    fn negated_implication_and_weak_duals() {
        assert_eq!(nnf("~(a(s) -> b(s))").to_string(), "a(s) * ~b(s)");
        assert_eq!(nnf("~(a(s) & b(s))").to_string(), "~a(s) | ~b(s)");
        assert_eq!(nnf("~(a(s) | ~b(s))").to_string(), "~a(s) & b(s)");
    }

    #[test]
    fn negated_quantifier_rejected() {
        let f = parse_formula("~(forall x: a(x))", &sig()).unwrap();
        assert_eq!(to_nnf(&f), Err(LogicError::NegatedQuantifier("x".into())));
    }

    #[test]
    fn fragment_membership() {
        assert!(check_concave_fragment(&nnf("(~a(s) + ~b(s)) + c(s)")).is_concave_fragment);
        let r = check_concave_fragment(&nnf("a(s) | b(s)"));
        assert!(!r.is_concave_fragment);
        assert_eq!(r.offending_path, Some(vec![]));
        assert_eq!(r.offending_connective, Some("weak disjunction (|)"));
        assert!(check_concave_fragment(&nnf("a(s) & (b(s) + ~c(s))")).is_concave_fragment);
        let r = check_concave_fragment(&nnf("forall x: a(x) & (b(x) * c(x))"));
        assert_eq!(r.offending_path, Some(vec![0, 1]));
    }
}
