//! Exact rational matrices.
//!
//! Every decision the solver makes (ranks, positive semidefiniteness, range
//! inclusion, the comparison of Schur entries) goes through this module, so
//! nothing here touches floating point.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den` in lowest terms. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Lossy conversion used once a value leaves the exact part of the pipeline.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix rows have unequal lengths")]
    Ragged,
    #[error("matrix is not symmetric: entry ({0}, {1}) differs from its transpose")]
    NotSymmetric(usize, usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

/// Dense rectangular matrix over the rationals, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { int(1) } else { int(0) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Ragged);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from integer rows; panics on ragged input.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
            .expect("ragged integer matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// Submatrix picking the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols, "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.first_asymmetry().is_none()
    }

    fn first_asymmetry(&self) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        (0..self.rows)
            .flat_map(|i| (i + 1..self.cols).map(move |j| (i, j)))
            .find(|&(i, j)| self[(i, j)] != self[(j, i)])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(to_f64).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).map(|k| &self[(i, k)] * &rhs[(k, j)]).sum()
        })
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "dimension mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl AsRef<Matrix> for Matrix {
    fn as_ref(&self) -> &Matrix {
        self
    }
}

/// Square matrix known to equal its transpose.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare(m.rows, m.cols));
        }
        match m.first_asymmetry() {
            Some((i, j)) => Err(LinalgError::NotSymmetric(i, j)),
            None => Ok(SymMatrix(m)),
        }
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Result<Self, LinalgError> {
        Self::new(Matrix::from_int_rows(rows))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn quadratic_form(&self, v: &[Rational]) -> Rational {
        v.iter().zip(self.0.mul_vec(v)).map(|(a, b)| a * b).sum()
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = Rational;

    fn index(&self, idx: (usize, usize)) -> &Rational {
        &self.0[idx]
    }
}

impl AsRef<Matrix> for SymMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Reduced row echelon form together with the pivot columns.
fn rref(m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..a.cols {
                a.data.swap(p * a.cols + j, r * a.cols + j);
            }
        }
        let inv = a[(r, c)].recip();
        for j in c..a.cols {
            a[(r, j)] = &a[(r, j)] * &inv;
        }
        for i in 0..a.rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone();
            for j in c..a.cols {
                let d = &f * &a[(r, j)];
                a[(i, j)] -= d;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Exact rank over the rationals.
pub fn rank(a: impl AsRef<Matrix>) -> usize {
    rref(a.as_ref()).1.len()
}

/// Some `X` with `A X = B`, free variables set to zero; `None` when the
/// system is inconsistent.
pub fn solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    assert_eq!(a.rows, b.rows, "row count mismatch in solve");
    let aug = Matrix::from_fn(a.rows, a.cols + b.cols, |i, j| {
        if j < a.cols {
            a[(i, j)].clone()
        } else {
            b[(i, j - a.cols)].clone()
        }
    });
    let (red, pivots) = rref(&aug);
    if pivots.last().is_some_and(|&c| c >= a.cols) {
        return None;
    }
    let mut x = Matrix::zeros(a.cols, b.cols);
    for (i, &c) in pivots.iter().enumerate() {
        for j in 0..b.cols {
            x[(c, j)] = red[(i, a.cols + j)].clone();
        }
    }
    Some(x)
}

/// Solution of `A W = B` for symmetric `A`. Exists iff `Ran B ⊆ Ran A`.
pub fn solve_sym(a: &SymMatrix, b: &Matrix) -> Option<Matrix> {
    solve(a.as_matrix(), b)
}

/// Basis of the right kernel `{v : A v = 0}`.
pub fn null_space(a: &Matrix) -> Vec<Vec<Rational>> {
    let (red, pivots) = rref(a);
    (0..a.cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rational::zero(); a.cols];
            v[free] = int(1);
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -red[(i, free)].clone();
            }
            v
        })
        .collect()
}

/// `Wᵀ A W`.
pub fn congruence(w: &Matrix, a: &SymMatrix) -> SymMatrix {
    let wt = w.transpose();
    SymMatrix(&(&wt * a.as_matrix()) * w)
}

/// Outcome of the pivoted LDLᵀ sweep.
enum Ldlt {
    Psd { rank: usize },
    /// Vector `v` with `vᵀ A v < 0`.
    Indefinite(Vec<Rational>),
}

/// Symmetric-pivoted rational LDLᵀ. A zero pivot must come with a zero row
/// in the remaining Schur complement, otherwise the matrix is indefinite.
fn ldlt(a: &SymMatrix) -> Ldlt {
    let n = a.dim();
    let mut s = a.as_matrix().clone();
    let mut active: Vec<usize> = (0..n).collect();
    let mut pivots: Vec<usize> = Vec::new();

    loop {
        let mut w: Option<Vec<(usize, Rational)>> = None;
        if let Some(&i) = active.iter().find(|&&i| s[(i, i)].is_negative()) {
            w = Some(vec![(i, int(1))]);
        }
        let pivot = active.iter().copied().find(|&i| s[(i, i)].is_positive());
        if w.is_none() && pivot.is_none() {
            // Remaining diagonal is zero: any off-diagonal entry breaks PSD.
            let off = active.iter().enumerate().find_map(|(k, &i)| {
                active[k + 1..]
                    .iter()
                    .find(|&&j| !s[(i, j)].is_zero())
                    .map(|&j| (i, j))
            });
            match off {
                Some((i, j)) => {
                    let sign = if s[(i, j)].is_positive() { int(-1) } else { int(1) };
                    w = Some(vec![(i, int(1)), (j, sign)]);
                }
                None => return Ldlt::Psd { rank: pivots.len() },
            }
        }
        if let Some(w) = w {
            return Ldlt::Indefinite(lift_witness(a, &pivots, &w));
        }

        let p = pivot.expect("pivot exists when no witness was found");
        active.retain(|&i| i != p);
        let d = s[(p, p)].clone();
        for &i in &active {
            if s[(i, p)].is_zero() {
                continue;
            }
            let f = &s[(i, p)] / &d;
            for &j in &active {
                let delta = &f * &s[(p, j)];
                s[(i, j)] -= delta;
            }
        }
        pivots.push(p);
    }
}

/// Extends a vector supported on the Schur-complement coordinates to the full
/// space so that the quadratic form of `A` equals that of the complement.
fn lift_witness(a: &SymMatrix, pivots: &[usize], w: &[(usize, Rational)]) -> Vec<Rational> {
    let n = a.dim();
    let mut v = vec![Rational::zero(); n];
    for (i, c) in w {
        v[*i] = c.clone();
    }
    if pivots.is_empty() {
        return v;
    }
    let app = a.as_matrix().select(pivots, pivots);
    let rhs = Matrix::from_fn(pivots.len(), 1, |k, _| {
        w.iter().map(|(i, c)| &a[(pivots[k], *i)] * c).sum()
    });
    let x = solve(&app, &rhs).expect("leading pivot block is positive definite");
    for (k, &p) in pivots.iter().enumerate() {
        v[p] = -x[(k, 0)].clone();
    }
    v
}

/// Exact positive semidefiniteness test.
pub fn is_psd(a: &SymMatrix) -> bool {
    matches!(ldlt(a), Ldlt::Psd { .. })
}

/// A vector `v` with `vᵀ A v < 0`, or `None` if `A ⪰ 0`.
pub fn psd_witness(a: &SymMatrix) -> Option<Vec<Rational>> {
    match ldlt(a) {
        Ldlt::Psd { .. } => None,
        Ldlt::Indefinite(v) => Some(v),
    }
}

/// Rank of a PSD matrix from its LDLᵀ pivots, `None` if not PSD.
pub fn psd_rank(a: &SymMatrix) -> Option<usize> {
    match ldlt(a) {
        Ldlt::Psd { rank } => Some(rank),
        Ldlt::Indefinite(_) => None,
    }
}

/// True iff every leading principal minor is strictly positive.
pub fn is_pd(a: &SymMatrix) -> bool {
    let n = a.dim();
    let mut s = a.as_matrix().clone();
    for k in 0..n {
        if !s[(k, k)].is_positive() {
            return false;
        }
        let d = s[(k, k)].clone();
        for i in k + 1..n {
            let f = &s[(i, k)] / &d;
            if f.is_zero() {
                continue;
            }
            for j in k + 1..n {
                let delta = &f * &s[(k, j)];
                s[(i, j)] -= delta;
            }
        }
    }
    true
}
