//! Moment data: the cubic input sequence, lex-indexed moment matrices, the
//! Riesz functional and atomic measures.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{Num, Signed, ToPrimitive};
use thiserror::Error;

use crate::linalg::{to_f64, Matrix, Rational, SymMatrix};
use crate::poly::{Monomial, Poly2};

/// Atoms closer than this in max-norm are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("beta_00 must be strictly positive, got {0}")]
    NonpositiveMass(Rational),
    #[error("quartic block is not Hankel: entries (0,2) and (1,1) differ")]
    NotHankel,
    #[error("block must be 3x3, got {0}x{1}")]
    BadBlockShape(usize, usize),
    #[error("polynomial degree {0} exceeds the available moment degree {1}")]
    DegreeTooHigh(u32, u32),
    #[error("measure has {atoms} atoms but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("measure needs at least one atom")]
    EmptyMeasure,
    #[error("weight {index} is not strictly positive ({value})")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("atom {0} has a non-finite coordinate")]
    NonFiniteAtom(usize),
}

/// Field in which a measure's atoms and weights live: exact rationals or
/// `f64`. Moments computed from a measure come back in the same field.
pub trait Scalar: Num + Clone + PartialOrd + Debug + ToPrimitive {
    fn from_rational(r: &Rational) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        to_f64(r)
    }
}

/// The ten moments `β_ij`, `i + j <= 3`, stored in graded lex order
/// (β00, β10, β01, β20, β11, β02, β30, β21, β12, β03).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSequence3 {
    beta: [Rational; 10],
}

impl MomentSequence3 {
    pub fn new(beta: [Rational; 10]) -> Result<Self, MomentError> {
        if !beta[0].is_positive() {
            return Err(MomentError::NonpositiveMass(beta[0].clone()));
        }
        Ok(MomentSequence3 { beta })
    }

    pub fn from_ints(beta: [i64; 10]) -> Result<Self, MomentError> {
        Self::new(beta.map(crate::linalg::int))
    }

    pub fn get(&self, i: u32, j: u32) -> &Rational {
        let pos = MonomialIndex::new(3)
            .position(Monomial::new(i, j))
            .unwrap_or_else(|| panic!("moment index ({i},{j}) out of range"));
        &self.beta[pos]
    }

    pub fn values(&self) -> &[Rational; 10] {
        &self.beta
    }

    pub fn iter(&self) -> impl Iterator<Item = (Monomial, &Rational)> {
        Monomial::up_to(3).into_iter().zip(self.beta.iter())
    }

    /// Moments of an exact measure. Fails if the total mass is not positive,
    /// which cannot happen for a validated measure.
    pub fn from_measure(m: &AtomicMeasure<Rational>) -> Result<Self, MomentError> {
        let table = moments_from_measure(m, 3);
        let beta: Vec<Rational> = Monomial::up_to(3).iter().map(|k| table[k].clone()).collect();
        Self::new(beta.try_into().expect("ten cubic moments"))
    }
}

/// Row/column labels of `M(n)`: monomials of degree `<= n` in graded lex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIndex {
    degree: u32,
    monomials: Vec<Monomial>,
}

impl MonomialIndex {
    pub fn new(degree: u32) -> Self {
        MonomialIndex {
            degree,
            monomials: Monomial::up_to(degree),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn position(&self, m: Monomial) -> Option<usize> {
        if m.degree() > self.degree {
            return None;
        }
        // Offset of the degree block plus the Y-power inside it.
        let d = m.degree() as usize;
        Some(d * (d + 1) / 2 + m.y as usize)
    }
}

/// Symmetric moment matrix `M(n)` whose `(X^k Y^l, X^k' Y^l')` entry is
/// `β_{k+k', l+l'}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentMatrix {
    index: MonomialIndex,
    mat: SymMatrix,
}

impl MomentMatrix {
    /// Builds `M(n)` from a moment lookup covering degrees up to `2n`.
    pub fn from_moments(n: u32, mut beta: impl FnMut(Monomial) -> Rational) -> Self {
        let index = MonomialIndex::new(n);
        let mons = index.monomials().to_vec();
        let mat = Matrix::from_fn(mons.len(), mons.len(), |i, j| beta(mons[i].times(mons[j])));
        MomentMatrix {
            index,
            mat: SymMatrix::new(mat).expect("moment matrices are symmetric"),
        }
    }

    pub fn degree(&self) -> u32 {
        self.index.degree()
    }

    pub fn index(&self) -> &MonomialIndex {
        &self.index
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn entry(&self, row: Monomial, col: Monomial) -> &Rational {
        let i = self.index.position(row).expect("row monomial out of range");
        let j = self.index.position(col).expect("column monomial out of range");
        &self.mat[(i, j)]
    }

    /// `β_m` for `deg m <= 2n`, read from the first cell that carries it.
    pub fn moment(&self, m: Monomial) -> Option<&Rational> {
        let mons = self.index.monomials();
        mons.iter().find_map(|&r| {
            if r.x > m.x || r.y > m.y {
                return None;
            }
            let c = Monomial::new(m.x - r.x, m.y - r.y);
            self.index.position(c).map(|j| &self.mat[(self.index.position(r).unwrap(), j)])
        })
    }

    /// All moments `β_m`, `deg m <= 2n`, in graded lex order.
    pub fn moments(&self) -> BTreeMap<Monomial, Rational> {
        Monomial::up_to(2 * self.degree())
            .into_iter()
            .map(|m| (m, self.moment(m).expect("moment present").clone()))
            .collect()
    }

    pub fn column(&self, m: Monomial) -> Vec<Rational> {
        let j = self.index.position(m).expect("column monomial out of range");
        self.mat.as_matrix().column(j)
    }

    /// Leading principal block indexed by monomials of degree `<= k`.
    pub fn truncate(&self, k: u32) -> MomentMatrix {
        assert!(k <= self.degree());
        MomentMatrix::from_moments(k, |m| self.moment(m).expect("moment present").clone())
    }

    /// True iff every cell agrees with the moment of its monomial sum.
    pub fn is_hankel(&self) -> bool {
        let mons = self.index.monomials();
        let mut seen: BTreeMap<Monomial, &Rational> = BTreeMap::new();
        for (i, &r) in mons.iter().enumerate() {
            for (j, &c) in mons.iter().enumerate() {
                let v = &self.mat[(i, j)];
                if *seen.entry(r.times(c)).or_insert(v) != v {
                    return false;
                }
            }
        }
        true
    }
}

/// `M(1)` of the cubic sequence.
pub fn build_m1(s: &MomentSequence3) -> MomentMatrix {
    MomentMatrix::from_moments(1, |m| s.get(m.x, m.y).clone())
}

/// The block `B(2)` coupling `M(1)` to the degree-two columns: rows 1, X, Y
/// and columns X², XY, Y².
pub fn build_b2(s: &MomentSequence3) -> Matrix {
    let rows = Monomial::up_to(1);
    let cols = &Monomial::up_to(2)[3..];
    Matrix::from_fn(3, 3, |i, j| {
        let m = rows[i].times(cols[j]);
        s.get(m.x, m.y).clone()
    })
}

/// Assembles `M(2) = [[M(1), B(2)], [B(2)ᵀ, C(2)]]`. `C(2)` supplies the
/// quartic moments and must itself be Hankel.
pub fn assemble_m2(s: &MomentSequence3, c2: &SymMatrix) -> Result<MomentMatrix, MomentError> {
    if c2.dim() != 3 {
        return Err(MomentError::BadBlockShape(c2.dim(), c2.dim()));
    }
    if c2[(0, 2)] != c2[(1, 1)] {
        return Err(MomentError::NotHankel);
    }
    Ok(MomentMatrix::from_moments(2, |m| match m.degree() {
        0..=3 => s.get(m.x, m.y).clone(),
        _ => {
            // C(2)[i][j] = β_{4-(i+j), i+j}
            let k = m.y as usize;
            let (i, j) = if k <= 2 { (0, k) } else { (k - 2, 2) };
            c2[(i, j)].clone()
        }
    }))
}

/// `L_β(P) = Σ a_ij β_ij` for `deg P <= 3`.
pub fn riesz(p: &Poly2, s: &MomentSequence3) -> Result<Rational, MomentError> {
    if let Some(d) = p.degree().filter(|&d| d > 3) {
        return Err(MomentError::DegreeTooHigh(d, 3));
    }
    Ok(p.terms().map(|(m, c)| c * s.get(m.x, m.y)).sum())
}

/// Finitely atomic positive measure `Σ ρ_k δ_(x_k, y_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure<T> {
    atoms: Vec<(T, T)>,
    weights: Vec<T>,
}

impl<T: Scalar> AtomicMeasure<T> {
    /// Validates weights and merges atoms that coincide within
    /// [`ATOM_MERGE_TOL`], summing their weights.
    pub fn new(atoms: Vec<(T, T)>, weights: Vec<T>) -> Result<Self, MomentError> {
        if atoms.len() != weights.len() {
            return Err(MomentError::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        if atoms.is_empty() {
            return Err(MomentError::EmptyMeasure);
        }
        for (index, w) in weights.iter().enumerate() {
            let value = w.to_f64_lossy();
            if !(*w > T::zero()) || value.is_nan() {
                return Err(MomentError::NonpositiveWeight { index, value });
            }
        }
        let mut merged: Vec<(T, T)> = Vec::with_capacity(atoms.len());
        let mut merged_w: Vec<T> = Vec::with_capacity(atoms.len());
        for (k, ((x, y), w)) in atoms.into_iter().zip(weights).enumerate() {
            let (fx, fy) = (x.to_f64_lossy(), y.to_f64_lossy());
            if !fx.is_finite() || !fy.is_finite() {
                return Err(MomentError::NonFiniteAtom(k));
            }
            let near = merged.iter().position(|(a, b)| {
                let dx = (a.clone() - x.clone()).to_f64_lossy().abs();
                let dy = (b.clone() - y.clone()).to_f64_lossy().abs();
                dx.max(dy) < ATOM_MERGE_TOL
            });
            match near {
                Some(i) => merged_w[i] = merged_w[i].clone() + w,
                None => {
                    merged.push((x, y));
                    merged_w.push(w);
                }
            }
        }
        Ok(AtomicMeasure {
            atoms: merged,
            weights: merged_w,
        })
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_f64(&self) -> AtomicMeasure<f64> {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|(x, y)| (x.to_f64_lossy(), y.to_f64_lossy()))
                .collect(),
            weights: self.weights.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

/// `β_ij = Σ_k ρ_k x_k^i y_k^j` for all `i + j <= max_degree`.
pub fn moments_from_measure<T: Scalar>(
    m: &AtomicMeasure<T>,
    max_degree: u32,
) -> BTreeMap<Monomial, T> {
    Monomial::up_to(max_degree)
        .into_iter()
        .map(|mon| {
            let v = m
                .atoms
                .iter()
                .zip(&m.weights)
                .fold(T::zero(), |acc, ((x, y), w)| {
                    acc + w.clone()
                        * num_traits::pow(x.clone(), mon.x as usize)
                        * num_traits::pow(y.clone(), mon.y as usize)
                });
            (mon, v)
        })
        .collect()
}
