use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::{Formula, LogicError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom {
            predicate: predicate.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

/// Truth values for ground atoms plus the sample universe quantifiers range
/// over.
#[derive(Debug, Clone, Default)]
pub struct Valuation {
    values: HashMap<GroundAtom, f64>,
    universe: Vec<String>,
}

impl Valuation {
    pub fn new(universe: Vec<String>) -> Self {
        Valuation {
            values: HashMap::new(),
            universe,
        }
    }

    pub fn set(&mut self, atom: GroundAtom, value: f64) {
        self.values.insert(atom, value);
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<f64> {
        self.values.get(atom).copied()
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }
}

/// Evaluates `f` with the Łukasiewicz connectives; `forall` takes the minimum
/// over the valuation's universe.
pub fn eval_lukasiewicz(f: &Formula, v: &Valuation) -> Result<f64, LogicError> {
    eval(f, v, &mut BTreeMap::new())
}

fn eval(f: &Formula, v: &Valuation, env: &mut BTreeMap<String, String>) -> Result<f64, LogicError> {
    Ok(match f {
        Formula::Atom(a) => {
            let args = a
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Ok(c.clone()),
                    Term::Var(x) => env.get(x).cloned().ok_or_else(|| LogicError::FreeVariable(x.clone())),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let g = GroundAtom {
                predicate: a.predicate.clone(),
                args,
            };
            let value = v.get(&g).ok_or_else(|| LogicError::MissingAtom(g.to_string()))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(LogicError::OutOfRange {
                    atom: g.to_string(),
                    value,
                });
            }
            value
        }
        Formula::Neg(a) => 1.0 - eval(a, v, env)?,
        Formula::StrongConj(a, b) => (eval(a, v, env)? + eval(b, v, env)? - 1.0).max(0.0),
        Formula::StrongDisj(a, b) => (eval(a, v, env)? + eval(b, v, env)?).min(1.0),
        Formula::WeakConj(a, b) => eval(a, v, env)?.min(eval(b, v, env)?),
        Formula::WeakDisj(a, b) => eval(a, v, env)?.max(eval(b, v, env)?),
        Formula::Implies(a, b) => (1.0 - eval(a, v, env)? + eval(b, v, env)?).min(1.0),
        Formula::Forall(x, body) => {
            let saved = env.get(x).cloned();
            let mut acc: f64 = 1.0;
            for s in &v.universe {
                env.insert(x.clone(), s.clone());
                let r = eval(body, v, env);
                match r {
                    Ok(val) => acc = acc.min(val),
                    Err(e) => {
                        restore(env, x, saved);
                        return Err(e);
                    }
                }
            }
            restore(env, x, saved);
            acc
        }
    })
}

fn restore(env: &mut BTreeMap<String, String>, x: &str, saved: Option<String>) {
    match saved {
        Some(s) => env.insert(x.to_string(), s),
        None => env.remove(x),
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Signature};

    fn two(x: f64, y: f64) -> Valuation {
        let mut v = Valuation::new(vec!["s".into()]);
        v.set(GroundAtom::new("x", &["s"]), x);
        v.set(GroundAtom::new("y", &["s"]), y);
        v
    }

    fn value(text: &str, x: f64, y: f64) -> f64 {
        let sig = Signature::new().with("x", 1).with("y", 1);
        eval_lukasiewicz(&parse_formula(text, &sig).unwrap(), &two(x, y)).unwrap()
    }

    #[test]
    fn connective_table() {
        assert_eq!(value("x(s) + y(s)", 0.7, 0.6), 1.0);
        assert!((value("x(s) * y(s)", 0.7, 0.6) - 0.3).abs() < 1e-15);
        assert_eq!(value("x(s) -> y(s)", 1.0, 0.0), 0.0);
        assert_eq!(value("x(s) & y(s)", 0.7, 0.6), 0.6);
        assert_eq!(value("x(s) | y(s)", 0.7, 0.6), 0.7);
        assert!((value("~x(s)", 0.7, 0.6) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn forall_is_minimum_over_universe() {
        let sig = Signature::new().with("p", 1);
        let f = parse_formula("forall z: p(z)", &sig).unwrap();
        let mut v = Valuation::new(vec!["a".into(), "b".into()]);
        v.set(GroundAtom::new("p", &["a"]), 0.9);
        v.set(GroundAtom::new("p", &["b"]), 0.4);
        assert_eq!(eval_lukasiewicz(&f, &v).unwrap(), 0.4);
    }

    #[test]
    fn missing_atom_reported() {
        let sig = Signature::new().with("p", 1);
        let f = parse_formula("p(c)", &sig).unwrap();
        let v = Valuation::new(vec![]);
        assert_eq!(eval_lukasiewicz(&f, &v), Err(LogicError::MissingAtom("p(c)".into())));
    }
}
