//! Sample sets, grounding coordinates and quantifier expansion.
//!
//! Every (predicate, sample tuple) pair gets one global coordinate of the
//! grounding vector `p`. Predicates occupy contiguous slices in declaration
//! order; inside a slice tuples are sorted lexicographically by sample name.
//! Coordinates are 0-based in the API and named `predicate:s1[,s2...]` in
//! every export.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::logic::{Nnf, Signature, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroundingError {
    #[error("predicate `{predicate}` refers to unknown domain `{domain}`")]
    UnknownDomain { predicate: String, domain: String },
    #[error("domain `{0}` has no samples")]
    EmptyDomain(String),
    #[error("predicate `{0}` declared twice")]
    DuplicatePredicate(String),
    #[error("predicate `{0}` must take at least one argument")]
    ZeroArity(String),
    #[error("sample `{sample}` appears twice in domain `{domain}`")]
    DuplicateSample { domain: String, sample: String },
    #[error("samples of domain `{0}` have inconsistent dimensions")]
    DimensionMismatch(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("sample `{sample}` is not in domain `{domain}`")]
    UnknownSample { domain: String, sample: String },
    #[error("tuple for `{predicate}` has {found} element(s), expected {expected}")]
    TupleArity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("variable `{var}` ranges over both `{first}` and `{second}`")]
    DomainConflict {
        var: String,
        first: String,
        second: String,
    },
    #[error("atom {0} has no grounding coordinate")]
    NotGrounded(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub name: String,
    pub coords: Vec<f64>,
}

impl Sample {
    pub fn new(name: &str, coords: &[f64]) -> Self {
        Sample {
            name: name.to_string(),
            coords: coords.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    /// One domain per argument.
    pub domains: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

impl PredicateDecl {
    pub fn new(name: &str, domains: &[&str]) -> Self {
        PredicateDecl {
            name: name.to_string(),
            domains: domains.iter().map(|d| d.to_string()).collect(),
            kernel: None,
        }
    }

    pub fn arity(&self) -> usize {
        self.domains.len()
    }
}

/// A labelled grounding; `label` must be `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supervision {
    pub predicate: String,
    pub samples: Vec<String>,
    pub label: i64,
}

impl Supervision {
    pub fn new(predicate: &str, samples: &[&str], label: i64) -> Self {
        Supervision {
            predicate: predicate.to_string(),
            samples: samples.iter().map(|s| s.to_string()).collect(),
            label,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSets {
    pub domains: BTreeMap<String, Vec<Sample>>,
    /// Explicit grounding tuples per predicate; absent means the Cartesian
    /// product of the argument domains.
    pub groundings: BTreeMap<String, Vec<Vec<String>>>,
    pub supervisions: Vec<Supervision>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSlice {
    pub name: String,
    pub domains: Vec<String>,
    pub offset: usize,
    pub tuples: Vec<Vec<String>>,
}

impl PredicateSlice {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.tuples.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingIndex {
    slices: Vec<PredicateSlice>,
    lookup: HashMap<(usize, Vec<String>), usize>,
    domains: BTreeMap<String, Vec<Sample>>,
}

impl GroundingIndex {
    /// Total number of coordinates `S`.
    pub fn len(&self) -> usize {
        self.slices.last().map_or(0, |s| s.offset + s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slices(&self) -> &[PredicateSlice] {
        &self.slices
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.slices.iter().position(|s| s.name == name)
    }

    pub fn to_global(&self, predicate: usize, tuple: usize) -> usize {
        self.slices[predicate].offset + tuple
    }

    pub fn from_global(&self, coord: usize) -> (usize, usize) {
        let j = self.slices.partition_point(|s| s.offset <= coord) - 1;
        (j, coord - self.slices[j].offset)
    }

    pub fn coordinate(&self, predicate: &str, tuple: &[String]) -> Option<usize> {
        let j = self.predicate_index(predicate)?;
        self.lookup.get(&(j, tuple.to_vec())).copied()
    }

    /// Export name of a coordinate, e.g. `p2:x1,x2`.
    pub fn coord_name(&self, coord: usize) -> String {
        let (j, s) = self.from_global(coord);
        let slice = &self.slices[j];
        format!("{}:{}", slice.name, slice.tuples[s].join(","))
    }

    /// Samples of a domain, sorted by name.
    pub fn domain_samples(&self, domain: &str) -> Option<&[Sample]> {
        self.domains.get(domain).map(Vec::as_slice)
    }

    /// Input vector of a grounding: the coordinates of the tuple's samples,
    /// concatenated.
    pub fn input(&self, predicate: usize, tuple: usize) -> Vec<f64> {
        let slice = &self.slices[predicate];
        slice.tuples[tuple]
            .iter()
            .zip(&slice.domains)
            .flat_map(|(name, dom)| {
                self.domains[dom]
                    .iter()
                    .find(|s| &s.name == name)
                    .map(|s| s.coords.clone())
                    .unwrap_or_default()
            })
            .collect()
    }

    pub fn inputs(&self, predicate: usize) -> Vec<Vec<f64>> {
        (0..self.slices[predicate].len()).map(|s| self.input(predicate, s)).collect()
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for s in &self.slices {
            sig.insert(&s.name, s.domains.len());
        }
        sig
    }
}

pub fn build_grounding_index(
    decls: &[PredicateDecl],
    samples: &SampleSets,
) -> Result<GroundingIndex, GroundingError> {
    let mut domains = BTreeMap::new();
    for (name, points) in &samples.domains {
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = sorted.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(GroundingError::DuplicateSample {
                domain: name.clone(),
                sample: w[0].name.clone(),
            });
        }
        if sorted.iter().any(|s| s.coords.len() != sorted[0].coords.len()) {
            return Err(GroundingError::DimensionMismatch(name.clone()));
        }
        domains.insert(name.clone(), sorted);
    }

    let mut seen = BTreeSet::new();
    for d in decls {
        if !seen.insert(d.name.as_str()) {
            return Err(GroundingError::DuplicatePredicate(d.name.clone()));
        }
        if d.domains.is_empty() {
            return Err(GroundingError::ZeroArity(d.name.clone()));
        }
        for dom in &d.domains {
            match domains.get(dom) {
                None => {
                    return Err(GroundingError::UnknownDomain {
                        predicate: d.name.clone(),
                        domain: dom.clone(),
                    })
                }
                Some(v) if v.is_empty() => return Err(GroundingError::EmptyDomain(dom.clone())),
                Some(_) => {}
            }
        }
    }
    for name in samples.groundings.keys() {
        if !seen.contains(name.as_str()) {
            return Err(GroundingError::UnknownPredicate(name.clone()));
        }
    }

    let check_tuple = |d: &PredicateDecl, t: &[String]| -> Result<(), GroundingError> {
        if t.len() != d.arity() {
            return Err(GroundingError::TupleArity {
                predicate: d.name.clone(),
                expected: d.arity(),
                found: t.len(),
            });
        }
        for (s, dom) in t.iter().zip(&d.domains) {
            if !domains[dom].iter().any(|x| &x.name == s) {
                return Err(GroundingError::UnknownSample {
                    domain: dom.clone(),
                    sample: s.clone(),
                });
            }
        }
        Ok(())
    };

    let mut slices = Vec::with_capacity(decls.len());
    let mut lookup = HashMap::new();
    let mut offset = 0;
    for (j, d) in decls.iter().enumerate() {
        let mut tuples: Vec<Vec<String>> = match samples.groundings.get(&d.name) {
            Some(list) => {
                let mut list = list.clone();
                for sup in samples.supervisions.iter().filter(|s| s.predicate == d.name) {
                    list.push(sup.samples.clone());
                }
                list
            }
            None => cartesian(d.domains.iter().map(|dom| {
                domains[dom].iter().map(|s| s.name.clone()).collect::<Vec<_>>()
            })),
        };
        for t in &tuples {
            check_tuple(d, t)?;
        }
        tuples.sort();
        tuples.dedup();
        for (s, t) in tuples.iter().enumerate() {
            lookup.insert((j, t.clone()), offset + s);
        }
        let len = tuples.len();
        slices.push(PredicateSlice {
            name: d.name.clone(),
            domains: d.domains.clone(),
            offset,
            tuples,
        });
        offset += len;
    }
    Ok(GroundingIndex {
        slices,
        lookup,
        domains,
    })
}

fn cartesian<I: Iterator<Item = Vec<String>>>(factors: I) -> Vec<Vec<String>> {
    let mut acc: Vec<Vec<String>> = vec![vec![]];
    for f in factors {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                f.iter().map(move |x| {
                    let mut t = prefix.clone();
                    t.push(x.clone());
                    t
                })
            })
            .collect();
    }
    acc
}

/// A quantifier-free formula over grounding coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundFormula {
    Literal { coord: usize, positive: bool },
    StrongConj(Vec<GroundFormula>),
    StrongDisj(Vec<GroundFormula>),
    WeakConj(Vec<GroundFormula>),
    WeakDisj(Vec<GroundFormula>),
}

impl GroundFormula {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            GroundFormula::Literal { coord, positive } => {
                if *positive {
                    p[*coord]
                } else {
                    1.0 - p[*coord]
                }
            }
            GroundFormula::StrongConj(v) => {
                let n = v.len() as f64;
                (v.iter().map(|g| g.eval(p)).sum::<f64>() - (n - 1.0)).max(0.0)
            }
            GroundFormula::StrongDisj(v) => v.iter().map(|g| g.eval(p)).sum::<f64>().min(1.0),
            GroundFormula::WeakConj(v) => v.iter().map(|g| g.eval(p)).fold(f64::INFINITY, f64::min),
            GroundFormula::WeakDisj(v) => v.iter().map(|g| g.eval(p)).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Replaces every maximal `forall` prefix by a weak conjunction over all
/// tuples of the bound variables' domains (outermost variable varies slowest)
/// and resolves atoms to coordinates.
pub fn expand_quantifiers(f: &Nnf, idx: &GroundingIndex) -> Result<GroundFormula, GroundingError> {
    let mut var_domains = BTreeMap::new();
    infer_domains(f, idx, &mut var_domains)?;
    expand(f, idx, &var_domains, &mut BTreeMap::new())
}

fn infer_domains(
    f: &Nnf,
    idx: &GroundingIndex,
    out: &mut BTreeMap<String, String>,
) -> Result<(), GroundingError> {
    match f {
        Nnf::Literal { atom, .. } => {
            let j = idx
                .predicate_index(&atom.predicate)
                .ok_or_else(|| GroundingError::UnknownPredicate(atom.predicate.clone()))?;
            let slice = &idx.slices[j];
            if atom.args.len() != slice.domains.len() {
                return Err(GroundingError::TupleArity {
                    predicate: atom.predicate.clone(),
                    expected: slice.domains.len(),
                    found: atom.args.len(),
                });
            }
            for (t, dom) in atom.args.iter().zip(&slice.domains) {
                if let Term::Var(v) = t {
                    match out.get(v) {
                        Some(prev) if prev != dom => {
                            return Err(GroundingError::DomainConflict {
                                var: v.clone(),
                                first: prev.clone(),
                                second: dom.clone(),
                            })
                        }
                        Some(_) => {}
                        None => {
                            out.insert(v.clone(), dom.clone());
                        }
                    }
                }
            }
            Ok(())
        }
        Nnf::StrongConj(a, b) | Nnf::StrongDisj(a, b) | Nnf::WeakConj(a, b) | Nnf::WeakDisj(a, b) => {
            infer_domains(a, idx, out)?;
            infer_domains(b, idx, out)
        }
        Nnf::Forall(_, body) => infer_domains(body, idx, out),
    }
}

fn expand(
    f: &Nnf,
    idx: &GroundingIndex,
    var_domains: &BTreeMap<String, String>,
    env: &mut BTreeMap<String, String>,
) -> Result<GroundFormula, GroundingError> {
    let pair = |a: &Nnf, b: &Nnf, env: &mut BTreeMap<String, String>| -> Result<Vec<GroundFormula>, GroundingError> {
        Ok(vec![expand(a, idx, var_domains, env)?, expand(b, idx, var_domains, env)?])
    };
    Ok(match f {
        Nnf::Literal { atom, positive } => {
            let j = idx.predicate_index(&atom.predicate).expect("checked by infer_domains");
            let slice = &idx.slices[j];
            let mut tuple = Vec::with_capacity(atom.args.len());
            for (t, dom) in atom.args.iter().zip(&slice.domains) {
                let name = match t {
                    Term::Var(v) => env.get(v).cloned().ok_or_else(|| GroundingError::FreeVariable(v.clone()))?,
                    Term::Const(c) => {
                        if !idx.domains[dom].iter().any(|s| &s.name == c) {
                            return Err(GroundingError::UnknownSample {
                                domain: dom.clone(),
                                sample: c.clone(),
                            });
                        }
                        c.clone()
                    }
                };
                tuple.push(name);
            }
            let coord = idx
                .lookup
                .get(&(j, tuple.clone()))
                .copied()
                .ok_or_else(|| GroundingError::NotGrounded(format!("{}({})", atom.predicate, tuple.join(","))))?;
            GroundFormula::Literal {
                coord,
                positive: *positive,
            }
        }
        Nnf::StrongConj(a, b) => GroundFormula::StrongConj(pair(a, b, env)?),
        Nnf::StrongDisj(a, b) => GroundFormula::StrongDisj(pair(a, b, env)?),
        Nnf::WeakConj(a, b) => GroundFormula::WeakConj(pair(a, b, env)?),
        Nnf::WeakDisj(a, b) => GroundFormula::WeakDisj(pair(a, b, env)?),
        Nnf::Forall(..) => {
            let mut vars = Vec::new();
            let mut body = f;
            while let Nnf::Forall(v, inner) = body {
                vars.push(v.clone());
                body = inner;
            }
            let mut ranges = Vec::with_capacity(vars.len());
            for v in &vars {
                let dom = var_domains
                    .get(v)
                    .ok_or_else(|| GroundingError::FreeVariable(v.clone()))?;
                let samples = &idx.domains[dom];
                if samples.is_empty() {
                    return Err(GroundingError::EmptyDomain(dom.clone()));
                }
                ranges.push(samples.iter().map(|s| s.name.clone()).collect::<Vec<_>>());
            }
            let saved: Vec<_> = vars.iter().map(|v| env.get(v).cloned()).collect();
            let mut conjuncts = Vec::new();
            let mut result = Ok(());
            for combo in cartesian(ranges.into_iter()) {
                for (v, s) in vars.iter().zip(combo) {
                    env.insert(v.clone(), s);
                }
                match expand(body, idx, var_domains, env) {
                    Ok(g) => conjuncts.push(g),
                    Err(e) => {
                        result = Err(e);
                        break;
                    }
                }
            }
            for (v, s) in vars.iter().zip(saved) {
                match s {
                    Some(s) => env.insert(v.clone(), s),
                    None => env.remove(v),
                };
            }
            result?;
            if conjuncts.len() == 1 {
                conjuncts.pop().unwrap()
            } else {
                GroundFormula::WeakConj(conjuncts)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, to_nnf};

    fn pair_problem() -> (Vec<PredicateDecl>, SampleSets) {
        let decls = vec![PredicateDecl::new("p1", &["X"]), PredicateDecl::new("p2", &["X", "X"])];
        let mut samples = SampleSets::default();
        samples
            .domains
            .insert("X".into(), vec![Sample::new("x2", &[0.0]), Sample::new("x1", &[1.0])]);
        (decls, samples)
    }

    #[test]
    fn pair_coordinate_order() {
        let (decls, samples) = pair_problem();
        let idx = build_grounding_index(&decls, &samples).unwrap();
        assert_eq!(idx.len(), 6);
        let names: Vec<_> = (0..6).map(|k| idx.coord_name(k)).collect();
        assert_eq!(names, ["p1:x1", "p1:x2", "p2:x1,x1", "p2:x1,x2", "p2:x2,x1", "p2:x2,x2"]);
        for k in 0..6 {
            let (j, s) = idx.from_global(k);
            assert_eq!(idx.to_global(j, s), k);
        }
        assert_eq!(idx.input(1, 1), vec![1.0, 0.0]);
    }

    #[test]
    fn single_and_shared_point() {
        let mut samples = SampleSets::default();
        samples.domains.insert("X".into(), vec![Sample::new("x1", &[0.4, 0.3])]);
        let one = build_grounding_index(&[PredicateDecl::new("p", &["X"])], &samples).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.coordinate("p", &["x1".into()]), Some(0));
        let three = build_grounding_index(
            &[
                PredicateDecl::new("p1", &["X"]),
                PredicateDecl::new("p2", &["X"]),
                PredicateDecl::new("p3", &["X"]),
            ],
            &samples,
        )
        .unwrap();
        assert_eq!(three.len(), 3);
    }

    #[test]
    fn empty_or_unknown_domain_rejected() {
        let mut samples = SampleSets::default();
        samples.domains.insert("X".into(), vec![]);
        assert_eq!(
            build_grounding_index(&[PredicateDecl::new("p", &["X"])], &samples),
            Err(GroundingError::EmptyDomain("X".into()))
        );
        assert!(matches!(
            build_grounding_index(&[PredicateDecl::new("p", &["Y"])], &samples),
            Err(GroundingError::UnknownDomain { .. })
        ));
    }

    #[test]
    fn grounding_override_keeps_supervised_tuples() {
        let (decls, mut samples) = pair_problem();
        samples.groundings.insert("p2".into(), vec![vec!["x2".into(), "x1".into()]]);
        samples.supervisions.push(Supervision::new("p2", &["x1", "x1"], 1));
        let idx = build_grounding_index(&decls, &samples).unwrap();
        assert_eq!(idx.len(), 4);
        assert_eq!(idx.coord_name(2), "p2:x1,x1");
        assert_eq!(idx.coord_name(3), "p2:x2,x1");
    }

    fn ground(text: &str, idx: &GroundingIndex) -> Result<GroundFormula, GroundingError> {
        let f = parse_formula(text, &idx.signature()).unwrap();
        expand_quantifiers(&to_nnf(&f).unwrap(), idx)
    }

    #[test]
    fn single_sample_expansion_is_not_wrapped() {
        let mut samples = SampleSets::default();
        samples.domains.insert("X".into(), vec![Sample::new("x1", &[0.0])]);
        let idx = build_grounding_index(&[PredicateDecl::new("p1", &["X"])], &samples).unwrap();
        let g = ground("forall x: p1(x) + ~p1(x)", &idx).unwrap();
        assert_eq!(
            g,
            GroundFormula::StrongDisj(vec![
                GroundFormula::Literal { coord: 0, positive: true },
                GroundFormula::Literal { coord: 0, positive: false },
            ])
        );
    }

    #[test]
    fn pair_expands_to_four_implications() {
        let (decls, samples) = pair_problem();
        let idx = build_grounding_index(&decls, &samples).unwrap();
        let g = ground("forall x: forall y: (p1(x) * p1(y)) -> p2(x,y)", &idx).unwrap();
        let GroundFormula::WeakConj(parts) = g else { panic!("expected conjunction") };
        assert_eq!(parts.len(), 4);
        // (x1,x2) and (x2,x1) both present
        let heads: Vec<usize> = parts
            .iter()
            .map(|p| match p {
                GroundFormula::StrongDisj(v) => match v[1] {
                    GroundFormula::Literal { coord, .. } => coord,
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(heads, [2, 3, 4, 5]);
    }

    #[test]
    fn symmetric_body_is_not_pruned() {
        let (decls, samples) = pair_problem();
        let idx = build_grounding_index(&decls, &samples).unwrap();
        let g = ground("forall x: forall y: p2(x,y) & p2(y,x)", &idx).unwrap();
        let GroundFormula::WeakConj(parts) = g else { panic!() };
        assert_eq!(parts.len(), 2usize.pow(2));
    }

    #[test]
    fn expansion_errors() {
        let (decls, mut samples) = pair_problem();
        samples.groundings.insert("p2".into(), vec![vec!["x1".into(), "x1".into()]]);
        let idx = build_grounding_index(&decls, &samples).unwrap();
        assert!(matches!(
            ground("forall x: p2(x, x2)", &idx),
            Err(GroundingError::NotGrounded(_))
        ));
        assert!(matches!(ground("p1(zz)", &idx), Err(GroundingError::UnknownSample { .. })));
    }
}
