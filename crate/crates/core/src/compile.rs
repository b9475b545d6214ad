//! Compilation of ground formulas, supervisions and range requirements into
//! affine constraint pieces `M_hi . p + q_hi <= 0`.
//!
//! A concave-fragment formula `f` is a minimum of affine functions on the unit
//! cube, so the constraint `1 - f(p) <= 0` is a maximum of affine pieces and
//! splits into one linear inequality per piece.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grounding::{expand_quantifiers, GroundFormula, GroundingError, GroundingIndex, Supervision};
use crate::logic::{check_concave_fragment, to_nnf, Formula, LogicError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("{connective} at path {path:?} is outside the concave fragment (only &, + and forall)")]
    NonFragment {
        path: Vec<usize>,
        connective: &'static str,
    },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("label {0} is not -1 or +1")]
    InvalidLabel(i64),
    #[error("supervised tuple {0} is not grounded")]
    UnsupervisedTuple(String),
    #[error("piece refers to coordinate {coord} but the grounding has {rows} coordinates")]
    DimensionMismatch { coord: usize, rows: usize },
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec(Vec<(usize, f64)>);

impl SparseVec {
    pub fn unit(k: usize, value: f64) -> Self {
        SparseVec::from_pairs([(k, value)])
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut v: Vec<(usize, f64)> = pairs.into_iter().collect();
        v.sort_by_key(|&(k, _)| k);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (k, x) in v {
            match out.last_mut() {
                Some((lk, lx)) if *lk == k => *lx += x,
                _ => out.push((k, x)),
            }
        }
        out.retain(|&(_, x)| x != 0.0);
        SparseVec(out)
    }

    pub fn from_dense(v: &[f64]) -> Self {
        SparseVec::from_pairs(v.iter().copied().enumerate())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0
            .binary_search_by_key(&k, |&(i, _)| i)
            .map_or(0.0, |i| self.0[i].1)
    }

    pub fn add(&self, other: &SparseVec) -> SparseVec {
        SparseVec::from_pairs(self.0.iter().chain(&other.0).copied())
    }

    pub fn scaled(&self, s: f64) -> SparseVec {
        SparseVec::from_pairs(self.0.iter().map(|&(k, x)| (k, s * x)))
    }

    pub fn dot(&self, p: &[f64]) -> f64 {
        self.0.iter().map(|&(k, x)| x * p[k]).sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(k, x) in &self.0 {
            v[k] = x;
        }
        v
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().map(|&(k, _)| k)
    }
}

/// `a . p + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub coeffs: SparseVec,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            coeffs: SparseVec::default(),
            constant: c,
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.coeffs.dot(p) + self.constant
    }

    fn is_saturated(&self) -> bool {
        self.coeffs.is_zero() && self.constant >= 1.0
    }
}

/// The concave piecewise-linear function `p -> min_i (a_i . p + c_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    pub pieces: Vec<Affine>,
}

impl AffineSet {
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.pieces.iter().map(|a| a.eval(p)).fold(f64::INFINITY, f64::min)
    }

    fn push_unique(&mut self, a: Affine) {
        if !self.pieces.contains(&a) {
            self.pieces.push(a);
        }
    }
}

/// Compiles a ground concave-fragment formula into its minimum-of-affines form.
///
/// Literals give one piece; `&` takes the union of the operand sets; `+`
/// yields the constant `1` plus every sum of one non-constant piece per
/// operand. Every piece is non-negative on the unit cube, so sums involving a
/// saturated constant are dominated by `1` and are not generated.
pub fn compile_min_affine(g: &GroundFormula) -> Result<AffineSet, CompileError> {
    compile_at(g, &mut Vec::new())
}

fn compile_at(g: &GroundFormula, path: &mut Vec<usize>) -> Result<AffineSet, CompileError> {
    let children = |v: &[GroundFormula], path: &mut Vec<usize>| -> Result<Vec<AffineSet>, CompileError> {
        v.iter()
            .enumerate()
            .map(|(i, c)| {
                path.push(i);
                let r = compile_at(c, path);
                path.pop();
                r
            })
            .collect()
    };
    match g {
        GroundFormula::Literal { coord, positive } => Ok(AffineSet {
            pieces: vec![if *positive {
                Affine {
                    coeffs: SparseVec::unit(*coord, 1.0),
                    constant: 0.0,
                }
            } else {
                Affine {
                    coeffs: SparseVec::unit(*coord, -1.0),
                    constant: 1.0,
                }
            }],
        }),
        GroundFormula::WeakConj(v) => {
            let mut out = AffineSet { pieces: vec![] };
            for set in children(v, path)? {
                for a in set.pieces {
                    out.push_unique(a);
                }
            }
            Ok(out)
        }
        GroundFormula::StrongDisj(v) => {
            let mut sets = children(v, path)?.into_iter();
            let mut acc = sets.next().unwrap_or(AffineSet { pieces: vec![] });
            for next in sets {
                let mut out = AffineSet {
                    pieces: vec![Affine::constant(1.0)],
                };
                for a in acc.pieces.iter().filter(|a| !a.is_saturated()) {
                    for b in next.pieces.iter().filter(|b| !b.is_saturated()) {
                        let sum = Affine {
                            coeffs: a.coeffs.add(&b.coeffs),
                            constant: a.constant + b.constant,
                        };
                        out.push_unique(if sum.is_saturated() { Affine::constant(1.0) } else { sum });
                    }
                }
                acc = out;
            }
            Ok(acc)
        }
        GroundFormula::StrongConj(_) => Err(CompileError::NonFragment {
            path: path.clone(),
            connective: "strong conjunction (*)",
        }),
        GroundFormula::WeakDisj(_) => Err(CompileError::NonFragment {
            path: path.clone(),
            connective: "weak disjunction (|)",
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logical,
    Pointwise,
    Consistency,
}

/// One linear piece `coeffs . p + offset <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub coeffs: SparseVec,
    pub offset: f64,
}

impl Piece {
    pub fn value(&self, p: &[f64]) -> f64 {
        self.coeffs.dot(p) + self.offset
    }

    /// A piece with no coefficients that can never be violated.
    pub fn is_trivial(&self) -> bool {
        self.coeffs.is_zero() && self.offset <= 0.0
    }
}

/// One constraint `max_i (M_hi . p + q_hi) <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBlock {
    pub name: String,
    pub family: Family,
    pub pieces: Vec<Piece>,
    pub source: String,
}

impl ConstraintBlock {
    pub fn value(&self, p: &[f64]) -> f64 {
        self.pieces.iter().map(|x| x.value(p)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Turns `f = min_i (a_i . p + c_i)` into the pieces `(-a_i, 1 - c_i)` of
/// `1 - f <= 0`. Constant pieces are kept.
pub fn to_constraint_block(set: &AffineSet, name: &str, family: Family, source: &str) -> ConstraintBlock {
    ConstraintBlock {
        name: name.to_string(),
        family,
        pieces: set
            .pieces
            .iter()
            .map(|a| Piece {
                coeffs: a.coeffs.scaled(-1.0),
                offset: 1.0 - a.constant,
            })
            .collect(),
        source: source.to_string(),
    }
}

/// Full pipeline for one knowledge-base formula.
pub fn compile_formula(f: &Formula, idx: &GroundingIndex, name: &str) -> Result<ConstraintBlock, CompileError> {
    let nnf = to_nnf(f)?;
    let report = check_concave_fragment(&nnf);
    if !report.is_concave_fragment {
        return Err(CompileError::NonFragment {
            path: report.offending_path.unwrap_or_default(),
            connective: report.offending_connective.unwrap_or("?"),
        });
    }
    let ground = expand_quantifiers(&nnf, idx)?;
    let set = compile_min_affine(&ground)?;
    Ok(to_constraint_block(&set, name, Family::Logical, &f.to_string()))
}

/// A supervision in logical form: `1 -> p(x)` for `+1`, `p(x) -> 0` for `-1`.
pub fn pointwise_block(sup: &Supervision, idx: &GroundingIndex) -> Result<ConstraintBlock, CompileError> {
    let atom = format!("{}({})", sup.predicate, sup.samples.join(","));
    let k = idx
        .coordinate(&sup.predicate, &sup.samples)
        .ok_or_else(|| CompileError::UnsupervisedTuple(atom.clone()))?;
    let (piece, source) = match sup.label {
        1 => (
            Piece {
                coeffs: SparseVec::unit(k, -1.0),
                offset: 1.0,
            },
            format!("1 -> {atom}"),
        ),
        -1 => (
            Piece {
                coeffs: SparseVec::unit(k, 1.0),
                offset: 0.0,
            },
            format!("{atom} -> 0"),
        ),
        other => return Err(CompileError::InvalidLabel(other)),
    };
    Ok(ConstraintBlock {
        name: format!("pw:{}", idx.coord_name(k)),
        family: Family::Pointwise,
        pieces: vec![piece],
        source,
    })
}

/// `-p <= 0` and `p - 1 <= 0` for every coordinate, in coordinate order.
pub fn consistency_blocks(idx: &GroundingIndex) -> Vec<ConstraintBlock> {
    let mut out = Vec::with_capacity(2 * idx.len());
    for k in 0..idx.len() {
        let name = idx.coord_name(k);
        let (pred, samples) = name.split_once(':').unwrap_or((&name, ""));
        let atom = format!("{pred}({samples})");
        out.push(ConstraintBlock {
            name: format!("lo:{name}"),
            family: Family::Consistency,
            pieces: vec![Piece {
                coeffs: SparseVec::unit(k, -1.0),
                offset: 0.0,
            }],
            source: format!("0 -> {atom}"),
        });
        out.push(ConstraintBlock {
            name: format!("hi:{name}"),
            family: Family::Consistency,
            pieces: vec![Piece {
                coeffs: SparseVec::unit(k, 1.0),
                offset: -1.0,
            }],
            source: format!("{atom} -> 1"),
        });
    }
    out
}

/// Whether trivially satisfied constant pieces become (zero) columns of `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantPieces {
    Keep,
    #[default]
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixColumn {
    /// 0-based block index.
    pub block: usize,
    /// 0-based piece index inside the block.
    pub piece: usize,
    pub coeffs: SparseVec,
    pub offset: f64,
}

impl MatrixColumn {
    /// 1-based `h:i` label.
    pub fn label(&self) -> String {
        format!("{}:{}", self.block + 1, self.piece + 1)
    }
}

/// `M` in `R^{S x N}` with one column per retained piece, in block-then-piece
/// order, and the offsets `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    pub rows: usize,
    pub columns: Vec<MatrixColumn>,
}

impl ConstraintMatrix {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.columns.len());
        for (c, col) in self.columns.iter().enumerate() {
            for &(k, x) in col.coeffs.entries() {
                m[(k, c)] = x;
            }
        }
        m
    }

    pub fn offsets(&self) -> DVector<f64> {
        DVector::from_iterator(self.columns.len(), self.columns.iter().map(|c| c.offset))
    }

    /// Column indices belonging to block `h`.
    pub fn block_columns(&self, h: usize) -> Vec<usize> {
        (0..self.columns.len()).filter(|&c| self.columns[c].block == h).collect()
    }

    /// `max_c (M_c . p + q_c)`, or `-inf` without columns.
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        self.columns
            .iter()
            .map(|c| c.coeffs.dot(p) + c.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `coord,h:i,...`, one row per coordinate and a trailing
    /// `q` row. Values use the shortest exact decimal form.
    pub fn to_csv(&self, idx: &GroundingIndex) -> String {
        let mut s = String::from("coord");
        for c in &self.columns {
            s.push(',');
            s.push_str(&c.label());
        }
        s.push('\n');
        let dense = self.to_dense();
        for k in 0..self.rows {
            s.push_str(&idx.coord_name(k).replace(',', ";"));
            for c in 0..self.columns.len() {
                let _ = write!(s, ",{}", fmt_value(dense[(k, c)]));
            }
            s.push('\n');
        }
        s.push('q');
        for c in &self.columns {
            let _ = write!(s, ",{}", fmt_value(c.offset));
        }
        s.push('\n');
        s
    }
}

pub(crate) fn fmt_value(x: f64) -> String {
    // no "-0" in exports
    if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-4 || x.abs() >= 1e16 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Stacks the pieces of `blocks` column-wise over `rows` coordinates.
pub fn assemble_matrix(
    blocks: &[ConstraintBlock],
    rows: usize,
    constants: ConstantPieces,
) -> Result<ConstraintMatrix, CompileError> {
    let mut columns = Vec::new();
    for (h, b) in blocks.iter().enumerate() {
        for (i, piece) in b.pieces.iter().enumerate() {
            if let Some(k) = piece.coeffs.max_index() {
                if k >= rows {
                    return Err(CompileError::DimensionMismatch { coord: k, rows });
                }
            }
            if constants == ConstantPieces::Drop && piece.is_trivial() {
                continue;
            }
            columns.push(MatrixColumn {
                block: h,
                piece: i,
                coeffs: piece.coeffs.clone(),
                offset: piece.offset,
            });
        }
    }
    Ok(ConstraintMatrix { rows, columns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{build_grounding_index, PredicateDecl, Sample, SampleSets};
    use crate::logic::parse_formula;

    fn pair_index() -> GroundingIndex {
        let decls = vec![PredicateDecl::new("p1", &["X"]), PredicateDecl::new("p2", &["X", "X"])];
        let mut samples = SampleSets::default();
        samples
            .domains
            .insert("X".into(), vec![Sample::new("x1", &[0.0]), Sample::new("x2", &[1.0])]);
        build_grounding_index(&decls, &samples).unwrap()
    }

    fn pair_block(idx: &GroundingIndex) -> ConstraintBlock {
        let f = parse_formula("forall x: forall y: (p1(x) * p1(y)) -> p2(x,y)", &idx.signature()).unwrap();
        compile_formula(&f, idx, "phi").unwrap()
    }

    #[test]
    fn implication_pair_has_five_pieces() {
        let idx = pair_index();
        let block = pair_block(&idx);
        assert_eq!(block.pieces.len(), 5);
        assert!(block.pieces[0].is_trivial());
        assert_eq!(block.pieces[0].offset, 0.0);
        assert_eq!(block.pieces[1].coeffs.to_dense(6), [2.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(block.pieces[1].offset, -1.0);
        assert_eq!(block.pieces[2].coeffs.to_dense(6), [1.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(block.pieces[3].coeffs.to_dense(6), [1.0, 1.0, 0.0, 0.0, -1.0, 0.0]);
        assert_eq!(block.pieces[4].coeffs.to_dense(6), [0.0, 2.0, 0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn literal_pieces() {
        let set = compile_min_affine(&GroundFormula::Literal { coord: 0, positive: true }).unwrap();
        assert_eq!(
            set.pieces,
            vec![Affine {
                coeffs: SparseVec::unit(0, 1.0),
                constant: 0.0
            }]
        );
        let block = to_constraint_block(&set, "b", Family::Logical, "p");
        assert_eq!(block.pieces[0].coeffs, SparseVec::unit(0, -1.0));
        assert_eq!(block.pieces[0].offset, 1.0);
        let one = to_constraint_block(
            &AffineSet {
                pieces: vec![Affine::constant(1.0)],
            },
            "b",
            Family::Logical,
            "",
        );
        assert!(one.pieces[0].coeffs.is_zero());
        assert_eq!(one.pieces[0].offset, 0.0);
    }

    #[test]
    fn non_fragment_reported() {
        let g = GroundFormula::WeakConj(vec![
            GroundFormula::Literal { coord: 0, positive: true },
            GroundFormula::WeakDisj(vec![
                GroundFormula::Literal { coord: 0, positive: true },
                GroundFormula::Literal { coord: 1, positive: true },
            ]),
        ]);
        assert_eq!(
            compile_min_affine(&g),
            Err(CompileError::NonFragment {
                path: vec![1],
                connective: "weak disjunction (|)"
            })
        );
    }

    #[test]
    fn tautology_collapses_to_constant() {
        let g = GroundFormula::StrongDisj(vec![
            GroundFormula::Literal { coord: 0, positive: true },
            GroundFormula::Literal { coord: 0, positive: false },
        ]);
        let set = compile_min_affine(&g).unwrap();
        assert_eq!(set.pieces, vec![Affine::constant(1.0)]);
    }

    fn three_on_one_point() -> (GroundingIndex, SampleSets) {
        let decls = vec![
            PredicateDecl::new("p1", &["X"]),
            PredicateDecl::new("p2", &["X"]),
            PredicateDecl::new("p3", &["X"]),
        ];
        let mut samples = SampleSets::default();
        samples.domains.insert("X".into(), vec![Sample::new("x1", &[0.4, 0.3])]);
        (build_grounding_index(&decls, &samples).unwrap(), samples)
    }

    #[test]
    fn pointwise_forms() {
        let (idx, _) = three_on_one_point();
        let pos = pointwise_block(&Supervision::new("p2", &["x1"], 1), &idx).unwrap();
        assert_eq!(pos.pieces, vec![Piece { coeffs: SparseVec::unit(1, -1.0), offset: 1.0 }]);
        assert_eq!(pos.source, "1 -> p2(x1)");
        let neg = pointwise_block(&Supervision::new("p1", &["x1"], -1), &idx).unwrap();
        assert_eq!(neg.pieces, vec![Piece { coeffs: SparseVec::unit(0, 1.0), offset: 0.0 }]);
        let p3 = pointwise_block(&Supervision::new("p3", &["x1"], 1), &idx).unwrap();
        assert_eq!(p3.pieces[0].coeffs, SparseVec::unit(2, -1.0));
        assert_eq!(
            pointwise_block(&Supervision::new("p3", &["x1"], 0), &idx),
            Err(CompileError::InvalidLabel(0))
        );
    }

    #[test]
    fn consistency_counts() {
        let (idx, _) = three_on_one_point();
        let blocks = consistency_blocks(&idx);
        assert_eq!(blocks.len(), 6);
        let p = [0.2, 0.5, 0.9];
        let values: Vec<f64> = blocks.iter().map(|b| b.value(&p)).collect();
        let expected = [-0.2, 0.2 - 1.0, -0.5, 0.5 - 1.0, -0.9, 0.9 - 1.0];
        for (a, b) in values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(consistency_blocks(&pair_index()).len(), 12);
    }

    #[test]
    fn assembly_and_csv() {
        let idx = pair_index();
        let block = pair_block(&idx);
        let kept = assemble_matrix(std::slice::from_ref(&block), 6, ConstantPieces::Keep).unwrap();
        assert_eq!(kept.len(), 5);
        let dropped = assemble_matrix(std::slice::from_ref(&block), 6, ConstantPieces::Drop).unwrap();
        assert_eq!(dropped.len(), 4);
        assert_eq!(dropped.columns[0].label(), "1:2");
        let csv = kept.to_csv(&idx);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "coord,1:1,1:2,1:3,1:4,1:5");
        assert_eq!(lines[1], "p1:x1,0,2,1,1,0");
        assert_eq!(lines[3], "p2:x1;x1,0,-1,0,0,0");
        assert_eq!(lines[7], "q,0,-1,-1,-1,-1");
        assert!(matches!(
            assemble_matrix(&[block], 3, ConstantPieces::Keep),
            Err(CompileError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_piece_matrix() {
        let b = ConstraintBlock {
            name: "b".into(),
            family: Family::Pointwise,
            pieces: vec![Piece { coeffs: SparseVec::unit(1, 1.0), offset: 0.0 }],
            source: String::new(),
        };
        let m = assemble_matrix(&[b], 2, ConstantPieces::Drop).unwrap().to_dense();
        assert_eq!(m, DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
    }
}
