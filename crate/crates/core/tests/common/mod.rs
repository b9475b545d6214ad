//! Oracles shared by the integration tests and the acceptance runner. Nothing
//! here calls into the library's evaluators or solvers.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

// ---------------------------------------------------------------------------
// random formulas of the convex fragment with their own evaluator

#[derive(Debug, Clone)]
pub enum Arg {
    Var(&'static str),
    Sample(usize),
}

/// Predicates: `p1`, `p2` unary and `p3` binary.
#[derive(Debug, Clone)]
pub enum Node {
    Lit { pred: usize, args: Vec<Arg>, neg: bool },
    And(Box<Node>, Box<Node>),
    Plus(Box<Node>, Box<Node>),
    Forall(&'static str, Box<Node>),
}

pub const ARITY: [usize; 3] = [1, 1, 2];
const VARS: [&str; 3] = ["u", "v", "w"];

fn gen_lit<R: Rng>(rng: &mut R, bound: &[&'static str], samples: usize) -> Node {
    let pred = rng.random_range(0..3);
    let args = (0..ARITY[pred])
        .map(|_| {
            if !bound.is_empty() && rng.random::<f64>() < 0.75 {
                Arg::Var(bound[rng.random_range(0..bound.len())])
            } else {
                Arg::Sample(rng.random_range(0..samples))
            }
        })
        .collect();
    Node::Lit {
        pred,
        args,
        neg: rng.random(),
    }
}

fn gen_node<R: Rng>(rng: &mut R, depth: usize, bound: &mut Vec<&'static str>, samples: usize) -> Node {
    if depth == 0 || rng.random::<f64>() < 0.2 {
        return gen_lit(rng, bound, samples);
    }
    let r = rng.random::<f64>();
    if r < 0.3 && bound.len() < VARS.len() {
        let var = VARS[bound.len()];
        bound.push(var);
        let body = gen_node(rng, depth - 1, bound, samples);
        bound.pop();
        Node::Forall(var, Box::new(body))
    } else if r < 0.65 {
        Node::And(
            Box::new(gen_node(rng, depth - 1, bound, samples)),
            Box::new(gen_node(rng, depth - 1, bound, samples)),
        )
    } else {
        Node::Plus(
            Box::new(gen_node(rng, depth - 1, bound, samples)),
            Box::new(gen_node(rng, depth - 1, bound, samples)),
        )
    }
}

fn uses(n: &Node, var: &str) -> bool {
    match n {
        Node::Lit { args, .. } => args.iter().any(|a| matches!(a, Arg::Var(v) if *v == var)),
        Node::And(a, b) | Node::Plus(a, b) => uses(a, var) || uses(b, var),
        Node::Forall(_, body) => uses(body, var),
    }
}

fn well_formed(n: &Node) -> bool {
    match n {
        Node::Lit { .. } => true,
        Node::And(a, b) | Node::Plus(a, b) => well_formed(a) && well_formed(b),
        Node::Forall(v, body) => uses(body, v) && well_formed(body),
    }
}

/// A closed formula of depth at most `max_depth` whose quantifiers all bind.
pub fn random_formula<R: Rng>(rng: &mut R, max_depth: usize, samples: usize) -> Node {
    loop {
        let depth = rng.random_range(1..=max_depth);
        let f = gen_node(rng, depth, &mut Vec::new(), samples);
        if well_formed(&f) {
            return f;
        }
    }
}

/// Coordinate of a ground atom: predicates in order, tuples lexicographic.
pub fn coordinate(pred: usize, tuple: &[usize], samples: usize) -> usize {
    match pred {
        0 => tuple[0],
        1 => samples + tuple[0],
        _ => 2 * samples + tuple[0] * samples + tuple[1],
    }
}

pub fn grounding_len(samples: usize) -> usize {
    2 * samples + samples * samples
}

/// Łukasiewicz truth value on the grounding vector `p`.
pub fn truth(n: &Node, p: &[f64], samples: usize, env: &mut Vec<(&'static str, usize)>) -> f64 {
    match n {
        Node::Lit { pred, args, neg } => {
            let tuple: Vec<usize> = args
                .iter()
                .map(|a| match a {
                    Arg::Sample(s) => *s,
                    Arg::Var(v) => env.iter().rev().find(|(name, _)| name == v).expect("bound").1,
                })
                .collect();
            let x = p[coordinate(*pred, &tuple, samples)];
            if *neg {
                1.0 - x
            } else {
                x
            }
        }
        Node::And(a, b) => truth(a, p, samples, env).min(truth(b, p, samples, env)),
        Node::Plus(a, b) => (truth(a, p, samples, env) + truth(b, p, samples, env)).min(1.0),
        Node::Forall(v, body) => {
            let mut m = f64::INFINITY;
            for s in 0..samples {
                env.push((v, s));
                m = m.min(truth(body, p, samples, env));
                env.pop();
            }
            m
        }
    }
}

fn atom_text(pred: usize, args: &[Arg]) -> String {
    let args: Vec<String> = args
        .iter()
        .map(|a| match a {
            Arg::Var(v) => v.to_string(),
            Arg::Sample(s) => format!("s{}", s + 1),
        })
        .collect();
    format!("p{}({})", pred + 1, args.join(","))
}

/// Concrete syntax, picking randomly among equivalent spellings so that
/// negation pushing and implication elimination get exercised.
pub fn render<R: Rng>(n: &Node, rng: &mut R) -> String {
    match n {
        Node::Lit { pred, args, neg } => {
            let a = atom_text(*pred, args);
            match (neg, rng.random_range(0..3)) {
                (false, 0) => format!("~~{a}"),
                (false, _) => a,
                (true, 0) => format!("~~~{a}"),
                (true, _) => format!("~{a}"),
            }
        }
        Node::And(a, b) => {
            let (a, b) = (render(a, rng), render(b, rng));
            if rng.random() {
                format!("({a} & {b})")
            } else {
                format!("~(~({a}) | ~({b}))")
            }
        }
        Node::Plus(a, b) => {
            let (a, b) = (render(a, rng), render(b, rng));
            match rng.random_range(0..3) {
                0 => format!("({a} + {b})"),
                1 => format!("(~({a}) -> {b})"),
                _ => format!("~(~({a}) * ~({b}))"),
            }
        }
        Node::Forall(v, body) => format!("(forall {v}: {})", render(body, rng)),
    }
}

/// Points of `[0,1]^n`, a fifth of them snapped to `{0, 1/2, 1}` where ties
/// between pieces are common.
pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let snap = rng.random::<f64>() < 0.2;
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>();
            if snap {
                (x * 2.0).round() / 2.0
            } else {
                x
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// random convex QPs and exhaustive active-set enumeration

#[derive(Debug, Clone)]
pub struct RandomQp {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    /// `a x + b <= 0`
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// `e x = d`
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Strictly convex, feasible by construction around a hidden point.
pub fn random_qp<R: Rng>(rng: &mut R) -> RandomQp {
    let n = rng.random_range(1..=8);
    let meq = rng.random_range(0..=2.min(n - 1));
    let mineq = rng.random_range(0..=12 - meq);
    let l = DMatrix::from_fn(n, n, |_, _| uniform(rng, -1.0, 1.0));
    let q = &l * l.transpose() + DMatrix::identity(n, n) * 0.5;
    let c = DVector::from_fn(n, |_, _| uniform(rng, -3.0, 3.0));
    let x0 = DVector::from_fn(n, |_, _| uniform(rng, -1.0, 1.0));
    let a = DMatrix::from_fn(mineq, n, |_, _| uniform(rng, -1.0, 1.0));
    let slack = DVector::from_fn(mineq, |_, _| {
        if rng.random::<f64>() < 0.4 {
            0.0
        } else {
            uniform(rng, 0.0, 1.0)
        }
    });
    let b = -(&a * &x0) - slack;
    let e = DMatrix::from_fn(meq, n, |_, _| uniform(rng, -1.0, 1.0));
    let d = &e * &x0;
    RandomQp { q, c, a, b, e, d }
}

impl RandomQp {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }
}

/// Tries every working set of inequality rows, solving the equality-constrained
/// KKT system and keeping the best point that is feasible with `mu >= 0`.
pub fn brute_force_qp(p: &RandomQp) -> Option<(DVector<f64>, f64)> {
    let n = p.c.len();
    let m = p.a.nrows();
    let meq = p.e.nrows();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let w: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if w.len() + meq > n {
            continue;
        }
        let k = w.len() + meq;
        let size = n + k;
        let mut kkt = DMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.q);
        for j in 0..n {
            rhs[j] = -p.c[j];
        }
        for (r, &i) in w.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = p.a[(i, j)];
                kkt[(j, n + r)] = p.a[(i, j)];
            }
            rhs[n + r] = -p.b[i];
        }
        for r in 0..meq {
            for j in 0..n {
                kkt[(n + w.len() + r, j)] = p.e[(r, j)];
                kkt[(j, n + w.len() + r)] = p.e[(r, j)];
            }
            rhs[n + w.len() + r] = p.d[r];
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else { continue };
        if (&kkt * &sol - &rhs).amax() > 1e-9 {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let feasible = (0..m).all(|i| p.a.row(i).dot(&x.transpose()) + p.b[i] <= 1e-9);
        let dual_ok = (0..w.len()).all(|r| sol[n + r] >= -1e-9);
        if feasible && dual_ok {
            let f = p.objective(&x);
            if best.as_ref().is_none_or(|(_, g)| f < *g) {
                best = Some((x, f));
            }
        }
    }
    best
}
