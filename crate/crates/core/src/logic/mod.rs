//! Łukasiewicz first-order formulas over `[0, 1]`.
//!
//! Concrete syntax (ASCII, one token per connective):
//!
//! ```text
//! formula := "forall" VAR ":" formula | impl
//! impl    := disj ("->" impl)?
//! disj    := conj ("|" conj)*
//! conj    := sdisj ("&" sdisj)*
//! sdisj   := sconj ("+" sconj)*
//! sconj   := unary ("*" unary)*
//! unary   := "~" unary | atom | "(" formula ")"
//! atom    := IDENT "(" term ("," term)* ")"
//! ```
//!
//! `~` is negation, `*` strong conjunction, `+` strong disjunction, `&` weak
//! conjunction, `|` weak disjunction and `->` the residuum. Identifiers bound by
//! an enclosing `forall` are variables; every other term names a sample.

mod eval;
mod nnf;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use eval::{eval_lukasiewicz, GroundAtom, Valuation};
pub use nnf::{check_concave_fragment, to_nnf, FragmentReport, Nnf};
pub use parser::parse_formula;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LogicError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown predicate `{name}` at {line}:{column}")]
    UnknownPredicate {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("predicate `{name}` expects {expected} argument(s), found {found} at {line}:{column}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        line: usize,
        column: usize,
    },
    #[error("quantified variable `{0}` does not occur in its body")]
    VacuousQuantifier(String),
    #[error("variable `{0}` is bound twice on one path")]
    Rebound(String),
    #[error("negated quantifier over `{0}` is outside the universal fragment")]
    NegatedQuantifier(String),
    #[error("no value for ground atom {0}")]
    MissingAtom(String),
    #[error("value {value} for {atom} is outside [0, 1]")]
    OutOfRange { atom: String, value: f64 },
    #[error("free variable `{0}`")]
    FreeVariable(String),
}

/// Predicate names and their arities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, arity: usize) -> Self {
        self.insert(name, arity);
        self
    }

    pub fn insert(&mut self, name: &str, arity: usize) {
        self.arities.insert(name.to_string(), arity);
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.to_string(),
            args,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", a.name())?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Neg(Box<Formula>),
    /// `*`, the t-norm `max(0, x + y - 1)`.
    StrongConj(Box<Formula>, Box<Formula>),
    /// `+`, the t-conorm `min(1, x + y)`.
    StrongDisj(Box<Formula>, Box<Formula>),
    /// `&`, `min(x, y)`.
    WeakConj(Box<Formula>, Box<Formula>),
    /// `|`, `max(x, y)`.
    WeakDisj(Box<Formula>, Box<Formula>),
    /// `->`, the residuum `min(1, 1 - x + y)`.
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn atom(predicate: &str, args: Vec<Term>) -> Self {
        Formula::Atom(Atom::new(predicate, args))
    }

    pub fn negation(f: Formula) -> Self {
        Formula::Neg(Box::new(f))
    }

    pub fn strong_conj(a: Formula, b: Formula) -> Self {
        Formula::StrongConj(Box::new(a), Box::new(b))
    }

    pub fn strong_disj(a: Formula, b: Formula) -> Self {
        Formula::StrongDisj(Box::new(a), Box::new(b))
    }

    pub fn weak_conj(a: Formula, b: Formula) -> Self {
        Formula::WeakConj(Box::new(a), Box::new(b))
    }

    pub fn weak_disj(a: Formula, b: Formula) -> Self {
        Formula::WeakDisj(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(var: &str, body: Formula) -> Self {
        Formula::Forall(var.to_string(), Box::new(body))
    }

    /// Binding strength used by the printer; larger binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Formula::Forall(..) => 0,
            Formula::Implies(..) => 1,
            Formula::WeakDisj(..) => 2,
            Formula::WeakConj(..) => 3,
            Formula::StrongDisj(..) => 4,
            Formula::StrongConj(..) => 5,
            Formula::Neg(..) | Formula::Atom(..) => 6,
        }
    }

    fn write_prec(&self, out: &mut String, min: u8) {
        let wrap = self.precedence() < min;
        if wrap {
            out.push('(');
        }
        match self {
            Formula::Atom(a) => out.push_str(&a.to_string()),
            Formula::Neg(a) => {
                out.push('~');
                a.write_prec(out, 6);
            }
            Formula::StrongConj(a, b) => binary(out, a, " * ", b, 5, 6),
            Formula::StrongDisj(a, b) => binary(out, a, " + ", b, 4, 5),
            Formula::WeakConj(a, b) => binary(out, a, " & ", b, 3, 4),
            Formula::WeakDisj(a, b) => binary(out, a, " | ", b, 2, 3),
            Formula::Implies(a, b) => binary(out, a, " -> ", b, 2, 1),
            Formula::Forall(v, body) => {
                out.push_str("forall ");
                out.push_str(v);
                out.push_str(": ");
                body.write_prec(out, 0);
            }
        }
        if wrap {
            out.push(')');
        }
    }

    /// Checks the binding invariants: every quantifier binds a variable that
    /// occurs in its body, no variable is rebound on a path, and every
    /// variable term is bound.
    pub fn check_bindings(&self) -> Result<(), LogicError> {
        fn walk(f: &Formula, bound: &mut Vec<String>) -> Result<(), LogicError> {
            match f {
                Formula::Atom(a) => {
                    for t in &a.args {
                        if let Term::Var(v) = t {
                            if !bound.contains(v) {
                                return Err(LogicError::FreeVariable(v.clone()));
                            }
                        }
                    }
                    Ok(())
                }
                Formula::Neg(a) => walk(a, bound),
                Formula::StrongConj(a, b)
                | Formula::StrongDisj(a, b)
                | Formula::WeakConj(a, b)
                | Formula::WeakDisj(a, b)
                | Formula::Implies(a, b) => {
                    walk(a, bound)?;
                    walk(b, bound)
                }
                Formula::Forall(v, body) => {
                    if bound.contains(v) {
                        return Err(LogicError::Rebound(v.clone()));
                    }
                    if !body.mentions_var(v) {
                        return Err(LogicError::VacuousQuantifier(v.clone()));
                    }
                    bound.push(v.clone());
                    let r = walk(body, bound);
                    bound.pop();
                    r
                }
            }
        }
        walk(self, &mut Vec::new())
    }

    fn mentions_var(&self, var: &str) -> bool {
        match self {
            Formula::Atom(a) => a.args.iter().any(|t| matches!(t, Term::Var(v) if v == var)),
            Formula::Neg(a) => a.mentions_var(var),
            Formula::StrongConj(a, b)
            | Formula::StrongDisj(a, b)
            | Formula::WeakConj(a, b)
            | Formula::WeakDisj(a, b)
            | Formula::Implies(a, b) => a.mentions_var(var) || b.mentions_var(var),
            Formula::Forall(_, body) => body.mentions_var(var),
        }
    }
}

fn binary(out: &mut String, a: &Formula, op: &str, b: &Formula, left: u8, right: u8) {
    a.write_prec(out, left);
    out.push_str(op);
    b.write_prec(out, right);
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_prec(&mut s, 0);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::Var(s.into())
    }

    #[test]
    fn printer_uses_minimal_parentheses() {
        let f = Formula::forall(
            "x",
            Formula::forall(
                "y",
                Formula::implies(
                    Formula::strong_conj(
                        Formula::atom("p1", vec![v("x")]),
                        Formula::atom("p1", vec![v("y")]),
                    ),
                    Formula::atom("p2", vec![v("x"), v("y")]),
                ),
            ),
        );
        assert_eq!(f.to_string(), "forall x: forall y: p1(x) * p1(y) -> p2(x,y)");
    }

    #[test]
    fn implication_is_right_associative_when_printed() {
        let a = || Formula::atom("a", vec![Term::Const("s".into())]);
        let left = Formula::implies(Formula::implies(a(), a()), a());
        let right = Formula::implies(a(), Formula::implies(a(), a()));
        assert_eq!(left.to_string(), "(a(s) -> a(s)) -> a(s)");
        assert_eq!(right.to_string(), "a(s) -> a(s) -> a(s)");
    }

    #[test]
    fn binding_checks() {
        let vacuous = Formula::forall("x", Formula::atom("p", vec![Term::Const("a".into())]));
        assert_eq!(
            vacuous.check_bindings(),
            Err(LogicError::VacuousQuantifier("x".into()))
        );
        let rebound = Formula::forall("x", Formula::forall("x", Formula::atom("p", vec![v("x")])));
        assert_eq!(rebound.check_bindings(), Err(LogicError::Rebound("x".into())));
        let free = Formula::atom("p", vec![v("z")]);
        assert_eq!(free.check_bindings(), Err(LogicError::FreeVariable("z".into())));
    }
}
