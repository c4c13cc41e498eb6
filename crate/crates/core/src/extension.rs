//! Flat extensions of the cubic data.
//!
//! `M(1)` and `B(2)` come straight from the ten moments. With `W` solving
//! `M(1) W = B(2)`, the Schur block `Wᵀ M(1) W = [[x,a,b],[a,y,t],[b,t,z]]`
//! decides everything: when `b = y` it is itself Hankel and gives a flat
//! `M(2)`; otherwise a quartic block `C(2)` is chosen so that
//! `C(2) - Wᵀ M(1) W` is PSD of rank one, and the resulting rank-4 `M(2)` is
//! extended flatly to `M(3)` by propagating its column relations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{
    congruence, int, is_psd, null_space, psd_witness, rank, solve, solve_sym, Matrix, Rational,
    SymMatrix,
};
use crate::moments::{build_b2, build_m1, MomentMatrix, MomentSequence3};
use crate::poly::{Monomial, Poly2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtensionError {
    #[error("no quartic block can be chosen for a {0} classification")]
    NotExtendable(ClassTag),
    #[error("moment beta_{}{} has conflicting derivations: {first} vs {second}", .monomial.x, .monomial.y)]
    ConflictingMoments {
        monomial: Monomial,
        first: Rational,
        second: Rational,
    },
    #[error("column relations do not determine every degree-3 column")]
    Underdetermined,
    #[error("extension lost flatness: rank M(3) = {rank_m3}, rank M(2) = {rank_m2}")]
    NotFlat { rank_m2: usize, rank_m3: usize },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// `W` with `M(1) W = B(2)` and the six entries of `Wᵀ M(1) W`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchurData {
    pub w: Matrix,
    pub x: Rational,
    pub a: Rational,
    pub b: Rational,
    pub y: Rational,
    pub t: Rational,
    pub z: Rational,
}

impl SchurData {
    /// `Wᵀ M(1) W` rebuilt from the six stored entries.
    pub fn block(&self) -> SymMatrix {
        let [x, a, b, y, t, z] = [&self.x, &self.a, &self.b, &self.y, &self.t, &self.z];
        SymMatrix::new(
            Matrix::from_rows(vec![
                vec![x.clone(), a.clone(), b.clone()],
                vec![a.clone(), y.clone(), t.clone()],
                vec![b.clone(), t.clone(), z.clone()],
            ])
            .expect("3x3"),
        )
        .expect("symmetric by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    /// `M(1)` is not positive semidefinite.
    NotPsd,
    /// `Ran B(2)` is not contained in `Ran M(1)`.
    NoRangeInclusion,
    /// `b = y`: `Wᵀ M(1) W` is Hankel and `M(2)` is flat over `M(1)`.
    FlatEqual,
    /// `b > y`.
    Greater,
    /// `b < y`.
    Less,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassTag::NotPsd => "NotPsd",
            ClassTag::NoRangeInclusion => "NoRangeInclusion",
            ClassTag::FlatEqual => "FlatEqual",
            ClassTag::Greater => "Greater",
            ClassTag::Less => "Less",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub tag: ClassTag,
    pub rank_m1: usize,
}

/// Column dependence `m = Σ c_k b_k` in a moment matrix, stored as the
/// polynomial `m - Σ c_k b_k` (coefficient +1 on the dependent monomial).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationPoly {
    pub dependent: Monomial,
    pub poly: Poly2,
}

impl fmt::Display for RelationPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.poly)
    }
}

/// Lex-first column basis of a moment matrix and one relation per
/// non-basis column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRelations {
    pub basis: Vec<Monomial>,
    pub relations: Vec<RelationPoly>,
}

impl ColumnRelations {
    pub fn polys(&self) -> Vec<Poly2> {
        self.relations.iter().map(|r| r.poly.clone()).collect()
    }

    /// Coordinates of monomial `m` (degree within the matrix) on the basis.
    fn reduce(&self, m: Monomial) -> Vec<Rational> {
        if let Some(k) = self.basis.iter().position(|&b| b == m) {
            let mut v = vec![Rational::zero(); self.basis.len()];
            v[k] = int(1);
            return v;
        }
        let rel = self
            .relations
            .iter()
            .find(|r| r.dependent == m)
            .expect("every non-basis monomial has a relation");
        self.basis.iter().map(|&b| -rel.poly.coeff(b)).collect()
    }
}

/// Everything needed to audit a constructed measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionCertificate {
    pub classification: Classification,
    pub schur: SchurData,
    pub c2: SymMatrix,
    pub rank_delta: usize,
    pub m2: MomentMatrix,
    pub m3: MomentMatrix,
    pub rank_m2: usize,
    pub rank_m3: usize,
    pub basis: Vec<Monomial>,
    pub relations: Vec<RelationPoly>,
}

/// `W` and `Wᵀ M(1) W`, or `None` when `M(1) W = B(2)` has no solution.
pub fn compute_schur(s: &MomentSequence3) -> Option<SchurData> {
    let m1 = build_m1(s);
    let w = solve_sym(m1.matrix(), &build_b2(s))?;
    let block = congruence(&w, m1.matrix());
    Some(SchurData {
        x: block[(0, 0)].clone(),
        a: block[(0, 1)].clone(),
        b: block[(0, 2)].clone(),
        y: block[(1, 1)].clone(),
        t: block[(1, 2)].clone(),
        z: block[(2, 2)].clone(),
        w,
    })
}

pub fn classify(s: &MomentSequence3) -> Classification {
    let m1 = build_m1(s);
    let rank_m1 = rank(m1.matrix());
    let tag = if !is_psd(m1.matrix()) {
        ClassTag::NotPsd
    } else {
        match compute_schur(s) {
            None => ClassTag::NoRangeInclusion,
            Some(sd) => match sd.b.cmp(&sd.y) {
                std::cmp::Ordering::Equal => ClassTag::FlatEqual,
                std::cmp::Ordering::Greater => ClassTag::Greater,
                std::cmp::Ordering::Less => ClassTag::Less,
            },
        }
    };
    Classification { tag, rank_m1 }
}

/// Vector `v` with `vᵀ M(1) v < 0` when `M(1)` is not PSD.
pub fn m1_negative_direction(s: &MomentSequence3) -> Option<Vec<Rational>> {
    psd_witness(build_m1(s).matrix())
}

/// Kernel vector `v` of `M(1)` with `vᵀ B(2) ≠ 0`, which certifies
/// `Ran B(2) ⊄ Ran M(1)` (the range of a symmetric matrix is the orthogonal
/// complement of its kernel).
pub fn range_exclusion_witness(s: &MomentSequence3) -> Option<(Vec<Rational>, Vec<Rational>)> {
    let m1 = build_m1(s);
    let b2t = build_b2(s).transpose();
    null_space(m1.matrix().as_matrix()).into_iter().find_map(|v| {
        let vb = b2t.mul_vec(&v);
        (!vb.iter().all(Zero::is_zero)).then_some((v, vb))
    })
}

/// Quartic block for the extension.
///
/// * `FlatEqual`: `C(2) = Wᵀ M(1) W`.
/// * `Greater`: `[[x,a,b],[a,b,t],[b,t,z]]`, difference `diag(0, b-y, 0)`.
/// * `Less`: `[[x+1,a,y],[a,y,t],[y,t,z+(y-b)²]]`, difference
///   `[[1,0,y-b],[0,0,0],[y-b,0,(y-b)²]]`.
pub fn choose_c2(sd: &SchurData, cls: &Classification) -> Result<SymMatrix, ExtensionError> {
    let SchurData { x, a, b, y, t, z, .. } = sd;
    let rows = match cls.tag {
        ClassTag::FlatEqual => return Ok(sd.block()),
        ClassTag::Greater => vec![
            vec![x.clone(), a.clone(), b.clone()],
            vec![a.clone(), b.clone(), t.clone()],
            vec![b.clone(), t.clone(), z.clone()],
        ],
        ClassTag::Less => {
            let gap = y - b;
            vec![
                vec![x + int(1), a.clone(), y.clone()],
                vec![a.clone(), y.clone(), t.clone()],
                vec![y.clone(), t.clone(), z + &gap * &gap],
            ]
        }
        tag => return Err(ExtensionError::NotExtendable(tag)),
    };
    if cls.rank_m1 < 3 {
        return Err(ExtensionError::Internal(format!(
            "b != y with singular M(1) (rank {})",
            cls.rank_m1
        )));
    }
    Ok(SymMatrix::new(Matrix::from_rows(rows).expect("3x3")).expect("symmetric by construction"))
}

/// `rank(C(2) - Wᵀ M(1) W)`.
pub fn rank_delta(c2: &SymMatrix, sd: &SchurData) -> usize {
    rank(c2.as_matrix() - sd.block().as_matrix())
}

/// Greedy lex-first column basis and the exact relation expressing every
/// other column in it.
pub fn extract_relations(m: &MomentMatrix) -> ColumnRelations {
    let mons = m.index().monomials();
    let full = m.matrix().as_matrix();
    let all_rows: Vec<usize> = (0..mons.len()).collect();
    let mut basis_pos: Vec<usize> = Vec::new();
    for j in 0..mons.len() {
        let mut trial = basis_pos.clone();
        trial.push(j);
        if rank(full.select(&all_rows, &trial)) == trial.len() {
            basis_pos = trial;
        }
    }
    let basis_cols = full.select(&all_rows, &basis_pos);
    let relations = (0..mons.len())
        .filter(|j| !basis_pos.contains(j))
        .map(|j| {
            let target = full.select(&all_rows, &[j]);
            let coef = solve(&basis_cols, &target).expect("column lies in the span of the basis");
            let mut poly = Poly2::monomial(mons[j], int(1));
            for (k, &b) in basis_pos.iter().enumerate() {
                poly.add_term(mons[b], -coef[(k, 0)].clone());
            }
            RelationPoly {
                dependent: mons[j],
                poly,
            }
        })
        .collect();
    ColumnRelations {
        basis: basis_pos.iter().map(|&j| mons[j]).collect(),
        relations,
    }
}

/// Flat extension `M(3)` of `M(2)`.
///
/// Every relation `P` of `M(2)` is multiplied by each monomial `q` with
/// `deg(Pq) <= 3`. The products form a linear system for the degree-3
/// columns in terms of the basis columns; a flat extension needs it to be
/// consistent and to determine all four columns. The Gram form
/// `M(3) = Cᵀ M_B C` over the basis is then checked cell by cell for the
/// moment (Hankel) structure, which is where conflicting quintic or sextic
/// derivations would surface.
pub fn build_flat_m3(
    m2: &MomentMatrix,
    rel: &ColumnRelations,
) -> Result<MomentMatrix, ExtensionError> {
    if m2.degree() != 2 {
        return Err(ExtensionError::Internal(format!(
            "expected M(2), got M({})",
            m2.degree()
        )));
    }
    let r = rel.basis.len();
    let cubic = &Monomial::up_to(3)[6..];

    let mut lhs: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Vec<Rational>> = Vec::new();
    for p in &rel.relations {
        let dp = p.poly.degree().unwrap_or(0);
        for q in Monomial::up_to(3 - dp).into_iter().skip(1) {
            let prod = p.poly.mul_monomial(q);
            let mut a = vec![Rational::zero(); cubic.len()];
            let mut g = vec![Rational::zero(); r];
            for (m, c) in prod.terms() {
                if m.degree() == 3 {
                    let k = cubic.iter().position(|&u| u == m).expect("cubic monomial");
                    a[k] += c;
                } else {
                    for (gk, vk) in g.iter_mut().zip(rel.reduce(m)) {
                        *gk -= c * vk;
                    }
                }
            }
            lhs.push(a);
            rhs.push(g);
        }
    }

    if lhs.is_empty() {
        return Err(ExtensionError::Underdetermined);
    }
    let a = Matrix::from_rows(lhs).expect("rectangular");
    let g = Matrix::from_rows(rhs).expect("rectangular");
    let u = match solve(&a, &g) {
        Some(u) => u,
        None => return Err(inconsistency(&a, &g, cubic, rel)),
    };
    if rank(&a) < cubic.len() {
        return Err(ExtensionError::Underdetermined);
    }

    // Coordinates of every degree <= 3 monomial on the basis.
    let mut coords: Vec<Vec<Rational>> = Monomial::up_to(2).into_iter().map(|m| rel.reduce(m)).collect();
    coords.extend((0..cubic.len()).map(|k| (0..r).map(|j| u[(k, j)].clone()).collect()));
    let c = Matrix::from_fn(r, coords.len(), |i, j| coords[j][i].clone());
    let basis_pos: Vec<usize> = rel
        .basis
        .iter()
        .map(|&b| m2.index().position(b).expect("basis within M(2)"))
        .collect();
    let mb = SymMatrix::new(m2.matrix().as_matrix().select(&basis_pos, &basis_pos))
        .expect("principal block of a symmetric matrix");
    let gram = congruence(&c, &mb);

    let mons = Monomial::up_to(3);
    let mut table: BTreeMap<Monomial, Rational> = m2.moments();
    for (i, &ri) in mons.iter().enumerate() {
        for (j, &cj) in mons.iter().enumerate() {
            let m = ri.times(cj);
            let v = &gram[(i, j)];
            match table.get(&m) {
                Some(prev) if prev != v => {
                    return Err(ExtensionError::ConflictingMoments {
                        monomial: m,
                        first: prev.clone(),
                        second: v.clone(),
                    });
                }
                Some(_) => {}
                None => {
                    table.insert(m, v.clone());
                }
            }
        }
    }

    let m3 = MomentMatrix::from_moments(3, |m| table[&m].clone());
    let (rank_m2, rank_m3) = (rank(m2.matrix()), rank(m3.matrix()));
    if rank_m2 != rank_m3 {
        return Err(ExtensionError::NotFlat { rank_m2, rank_m3 });
    }
    Ok(m3)
}

/// Names the first cubic column whose derivations disagree.
fn inconsistency(a: &Matrix, g: &Matrix, cubic: &[Monomial], rel: &ColumnRelations) -> ExtensionError {
    // An equation with no cubic part and a nonzero right side means M(2)
    // itself is not recursively generated.
    for i in 0..a.rows() {
        if a.row(i).iter().all(Zero::is_zero) && !g.row(i).iter().all(Zero::is_zero) {
            return ExtensionError::ConflictingMoments {
                monomial: Monomial::new(2, 0),
                first: Rational::zero(),
                second: g.row(i).iter().find(|v| !v.is_zero()).cloned().unwrap_or_default(),
            };
        }
    }
    // Otherwise two products define the same cubic column differently; solve
    // with each equation alone and report the first disagreement.
    for (k, &m) in cubic.iter().enumerate() {
        let defs: Vec<usize> = (0..a.rows())
            .filter(|&i| {
                a[(i, k)].is_one() && a.row(i).iter().enumerate().all(|(j, v)| j == k || v.is_zero())
            })
            .collect();
        if let [first, second, ..] = defs[..] {
            if g.row(first) != g.row(second) {
                let pick = |row: usize| {
                    g.row(row)
                        .iter()
                        .zip(&rel.basis)
                        .find(|(v, _)| !v.is_zero())
                        .map(|(v, _)| v.clone())
                        .unwrap_or_default()
                };
                return ExtensionError::ConflictingMoments {
                    monomial: m,
                    first: pick(first),
                    second: pick(second),
                };
            }
        }
    }
    ExtensionError::ConflictingMoments {
        monomial: cubic[0],
        first: Rational::zero(),
        second: Rational::one(),
    }
}

/// Runs the engine end to end on exact data: classification, quartic block,
/// `M(2)`, relations and the flat `M(3)`.
pub fn extend(s: &MomentSequence3) -> Result<ExtensionCertificate, ExtensionError> {
    let classification = classify(s);
    let schur = match classification.tag {
        ClassTag::NotPsd | ClassTag::NoRangeInclusion => {
            return Err(ExtensionError::NotExtendable(classification.tag))
        }
        _ => compute_schur(s).expect("range inclusion holds"),
    };
    let c2 = choose_c2(&schur, &classification)?;
    let delta = rank_delta(&c2, &schur);
    let m2 = crate::moments::assemble_m2(s, &c2)
        .map_err(|e| ExtensionError::Internal(e.to_string()))?;
    let rank_m2 = rank(m2.matrix());
    if rank_m2 != classification.rank_m1 + delta {
        return Err(ExtensionError::Internal(format!(
            "rank additivity failed: {rank_m2} != {} + {delta}",
            classification.rank_m1
        )));
    }
    if !is_psd(m2.matrix()) {
        return Err(ExtensionError::Internal("constructed M(2) is not PSD".into()));
    }
    let rel = extract_relations(&m2);
    let m3 = build_flat_m3(&m2, &rel)?;
    let rank_m3 = rank(m3.matrix());
    Ok(ExtensionCertificate {
        classification,
        schur,
        c2,
        rank_delta: delta,
        m2,
        m3,
        rank_m2,
        rank_m3,
        basis: rel.basis,
        relations: rel.relations,
    })
}

impl SchurData {
    /// `b - y`, the quantity that picks the branch.
    pub fn gap(&self) -> Rational {
        &self.b - &self.y
    }

    pub fn is_flat(&self) -> bool {
        !self.gap().is_positive() && !self.gap().is_negative()
    }
}
