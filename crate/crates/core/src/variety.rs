//! Real common zeros of the column relations.
//!
//! Elimination is exact: Sylvester resultants over `Q[x]` (or `Q[y]`) with a
//! fraction-free determinant, then Sturm isolation of the real roots of the
//! two eliminants. Candidate points are the pairs of an `x`-root and a
//! `y`-root that satisfy every relation up to a scaled residual.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{int, to_f64, Rational};
use crate::moments::ATOM_MERGE_TOL;
use crate::poly::{Poly2, UniPoly};

/// Width of the isolating intervals before float polishing.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VarietyError {
    #[error("resultant vanishes identically (common factor)")]
    IdenticallyZero,
    #[error("relations cut out a curve, not finitely many points")]
    InfiniteVariety,
    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarietyResult {
    pub points: Vec<(f64, f64)>,
    /// The same points as rationals within `2^-REFINED_BITS` per coordinate.
    pub refined: Vec<(Rational, Rational)>,
    /// Largest `|P(x, y)|` over the relations, per point.
    pub residuals: Vec<f64>,
    /// Square-free univariate polynomials whose roots contain the `x`- and
    /// `y`-coordinates of every point.
    pub x_eliminant: UniPoly,
    pub y_eliminant: UniPoly,
}

/// Resultant of `p` and `q` with respect to `y`, a polynomial in `x`.
///
/// A factor of degree 0 in `y` is its own eliminant: `Res_y(p, q) = p^n`
/// when `deg_y p = 0` and `deg_y q = n`.
pub fn resultant_y(p: &Poly2, q: &Poly2) -> Result<UniPoly, VarietyError> {
    nonzero(resultant(&p.coeffs_in_y(), &q.coeffs_in_y()))
}

/// Resultant of `p` and `q` with respect to `x`, a polynomial in `y`.
pub fn resultant_x(p: &Poly2, q: &Poly2) -> Result<UniPoly, VarietyError> {
    nonzero(resultant(&p.coeffs_in_x(), &q.coeffs_in_x()))
}

fn nonzero(r: UniPoly) -> Result<UniPoly, VarietyError> {
    if r.is_zero() {
        Err(VarietyError::IdenticallyZero)
    } else {
        Ok(r)
    }
}

/// Sylvester resultant of two polynomials given by their coefficient lists
/// (lowest power first) over `Q[t]`.
fn resultant(p: &[UniPoly], q: &[UniPoly]) -> UniPoly {
    if p.is_empty() || q.is_empty() {
        return UniPoly::zero();
    }
    let (m, n) = (p.len() - 1, q.len() - 1);
    match (m, n) {
        (0, 0) => return UniPoly::constant(int(1)),
        (0, _) => return p[0].pow(n),
        (_, 0) => return q[0].pow(m),
        _ => {}
    }
    let size = m + n;
    let mut s = vec![vec![UniPoly::zero(); size]; size];
    for (i, row) in s.iter_mut().enumerate().take(n) {
        for (k, c) in p.iter().rev().enumerate() {
            row[i + k] = c.clone();
        }
    }
    for (i, row) in s.iter_mut().skip(n).enumerate() {
        for (k, c) in q.iter().rev().enumerate() {
            row[i + k] = c.clone();
        }
    }
    bareiss_det(s)
}

/// Fraction-free determinant over `Q[t]`; every division is exact.
fn bareiss_det(mut a: Vec<Vec<UniPoly>>) -> UniPoly {
    let n = a.len();
    let mut negate = false;
    let mut prev = UniPoly::constant(int(1));
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return UniPoly::zero();
            };
            a.swap(k, p);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[i][j].mul(&a[k][k]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.exact_div(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        det.neg()
    } else {
        det
    }
}

/// Integer multiple of a rational polynomial by a positive constant, so
/// signs can be read off without rational normalisation.
struct IntPoly(Vec<BigInt>);

impl IntPoly {
    fn new(u: &UniPoly) -> Self {
        let lcm = u
            .coeffs()
            .iter()
            .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let ints: Vec<BigInt> = u.coeffs().iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
        let g = ints.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        IntPoly(if g.is_zero() { ints } else { ints.into_iter().map(|c| c / &g).collect() })
    }

    /// Sign of the value at `x = n/d`, via the homogenised form
    /// `sum c_i n^i d^(deg-i)` (`d > 0`).
    fn sign_at(&self, x: &Rational) -> Ordering {
        let (n, d) = (x.numer(), x.denom());
        let mut it = self.0.iter().rev();
        let Some(lead) = it.next() else { return Ordering::Equal };
        let mut acc = lead.clone();
        let mut dpow = BigInt::one();
        for c in it {
            dpow *= d;
            acc = acc * n + c * &dpow;
        }
        acc.cmp(&BigInt::zero())
    }
}

fn sign_changes(chain: &[IntPoly], x: &Rational) -> usize {
    let mut last = Ordering::Equal;
    let mut count = 0;
    for p in chain {
        let s = p.sign_at(x);
        if s != Ordering::Equal {
            if last != Ordering::Equal && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Bits of precision of the rational root approximations used downstream.
pub const REFINED_BITS: usize = 120;

/// Disjoint intervals `(a, b]`, ascending, each holding exactly one root of
/// the square-free `p`, shrunk to `width` (or a single exact root).
fn isolate(p: &UniPoly, width: &Rational) -> Vec<(Rational, Rational)> {
    let chain: Vec<IntPoly> = p.sturm_chain().iter().map(IntPoly::new).collect();
    let count = |a: &Rational, b: &Rational| sign_changes(&chain, a) - sign_changes(&chain, b);
    let two = int(2);
    let bound = p.root_bound();
    let mut pending = vec![(-bound.clone(), bound)];
    let mut out = Vec::new();
    while let Some((a, b)) = pending.pop() {
        match count(&a, &b) {
            0 => {}
            1 => out.push(narrow(&chain, a, b, width)),
            _ => {
                let mid = (&a + &b) / &two;
                pending.push((a, mid.clone()));
                pending.push((mid, b));
            }
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Shrinks `(a, b]`, known to hold exactly one simple root, to `width`.
/// Returns `(r, r)` when a bisection point hits the root exactly.
fn narrow(chain: &[IntPoly], mut a: Rational, mut b: Rational, width: &Rational) -> (Rational, Rational) {
    let p = &chain[0];
    let two = int(2);
    if p.sign_at(&b) == Ordering::Equal {
        return (b.clone(), b);
    }
    // `a` may be a neighbouring root; step off it with the Sturm count.
    while p.sign_at(&a) == Ordering::Equal {
        let mid = (&a + &b) / &two;
        if p.sign_at(&mid) == Ordering::Equal {
            return (mid.clone(), mid);
        }
        if sign_changes(chain, &a) - sign_changes(chain, &mid) == 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let sa = p.sign_at(&a);
    while &b - &a > *width {
        let mid = (&a + &b) / &two;
        let s = p.sign_at(&mid);
        if s == Ordering::Equal {
            return (mid.clone(), mid);
        }
        if s == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    (a, b)
}

/// Rational with the smallest denominator in `[a, b]`.
fn simplest_between(a: &Rational, b: &Rational) -> Rational {
    if b.is_negative() {
        return -simplest_between(&-b, &-a);
    }
    if !a.is_positive() {
        return Rational::zero();
    }
    let n = a.ceil();
    if &n <= b {
        return n;
    }
    let fl = a.floor();
    let inner = simplest_between(&(b - &fl).recip(), &(a - &fl).recip());
    fl + inner.recip()
}

/// Representative of an isolating interval: a rational root when the
/// simplest rational inside is one, otherwise the midpoint.
fn representative(p: &IntPoly, (a, b): (Rational, Rational)) -> Rational {
    if a == b {
        return a;
    }
    let q = simplest_between(&a, &b);
    if p.sign_at(&q) == Ordering::Equal {
        q
    } else {
        (a + b) / int(2)
    }
}

/// Distinct real roots, ascending, each within `tol` of the true root.
pub fn real_roots(u: &UniPoly, tol: f64) -> Result<Vec<f64>, VarietyError> {
    if u.is_zero() {
        return Err(VarietyError::ZeroPolynomial);
    }
    let p = u.square_free();
    if p.degree().unwrap_or(0) == 0 {
        return Ok(Vec::new());
    }
    let width = BigRational::from_float(tol.max(f64::EPSILON)).unwrap_or_else(|| int(1));
    Ok(isolate(&p, &width).into_iter().map(|iv| polish(&p, iv)).collect())
}

/// Distinct real roots, ascending, as rationals within `2^-bits` of the
/// true roots (exact when a root is hit).
pub fn refined_roots(u: &UniPoly, bits: usize) -> Result<Vec<Rational>, VarietyError> {
    if u.is_zero() {
        return Err(VarietyError::ZeroPolynomial);
    }
    let p = u.square_free();
    if p.degree().unwrap_or(0) == 0 {
        return Ok(Vec::new());
    }
    let width = Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(2), bits));
    let ip = IntPoly::new(&p);
    Ok(isolate(&p, &width).into_iter().map(|iv| representative(&ip, iv)).collect())
}

/// Newton steps from the midpoint of an isolating interval, kept inside it.
fn polish(p: &UniPoly, (a, b): (Rational, Rational)) -> f64 {
    if a == b {
        return to_f64(&a);
    }
    let (lo, hi) = (to_f64(&a), to_f64(&b));
    let dp = p.derivative();
    let mut x = (lo + hi) / 2.0;
    for _ in 0..8 {
        let d = dp.eval_f64(x);
        if d == 0.0 {
            break;
        }
        let next = x - p.eval_f64(x) / d;
        if !(lo..=hi).contains(&next) || next == x {
            break;
        }
        x = next;
    }
    x
}

/// Residual bound for accepting a point on `Z(P)`.
fn accepts(p: &Poly2, x: f64, y: f64, tol: f64) -> Option<f64> {
    let r = p.eval_f64(x, y).abs();
    let scale = 1.0f64.max(x.abs()).max(y.abs()).powi(3);
    (r <= tol * (1.0 + p.norm1() * scale)).then_some(r)
}

/// Gcd of a family of univariate polynomials; `None` when it is identically
/// zero (every member vanishes).
fn gcd_all(polys: impl IntoIterator<Item = UniPoly>) -> Option<UniPoly> {
    let g = polys.into_iter().fold(UniPoly::zero(), |g, p| g.gcd(&p));
    (!g.is_zero()).then_some(g)
}

/// Univariate eliminant in `x` (`by_y = true`) or in `y`.
fn eliminant(rels: &[&Poly2], by_y: bool) -> Option<UniPoly> {
    let deg = |p: &Poly2| if by_y { p.degree_in_y() } else { p.degree_in_x() }.unwrap_or(0);
    let mut family = Vec::new();
    for (i, p) in rels.iter().enumerate() {
        if deg(p) == 0 {
            let c = if by_y { p.coeffs_in_y() } else { p.coeffs_in_x() };
            family.push(c[0].clone());
        }
        for q in &rels[i + 1..] {
            let r = if by_y { resultant_y(p, q) } else { resultant_x(p, q) };
            if let Ok(r) = r {
                family.push(r);
            }
        }
    }
    gcd_all(family)
}

/// Real points where every relation vanishes.
///
/// A degree-one relation is used to substitute one variable away; otherwise
/// both coordinates are eliminated by resultants. Points closer than the
/// merge tolerance are reported once.
pub fn common_zeros(relations: &[Poly2], tol: f64) -> Result<VarietyResult, VarietyError> {
    let rels: Vec<&Poly2> = relations.iter().filter(|p| !p.is_zero()).collect();
    if rels.is_empty() {
        return Err(VarietyError::InfiniteVariety);
    }

    let mut candidates: Vec<(Rational, Rational)> = Vec::new();
    let (x_eliminant, y_eliminant);
    if let Some(line) = rels.iter().find(|p| p.degree() == Some(1)) {
        use crate::poly::Monomial;
        let (c0, c1, c2) = (
            line.coeff(Monomial::ONE),
            line.coeff(Monomial::X),
            line.coeff(Monomial::Y),
        );
        if !c2.is_zero() {
            // y = a + b·x
            let (a, b) = (-&c0 / &c2, -&c1 / &c2);
            let ex = gcd_all(rels.iter().map(|p| p.substitute_y(&a, &b)))
                .ok_or(VarietyError::InfiniteVariety)?;
            for x in refined_roots(&ex, REFINED_BITS)? {
                let y = &a + &b * &x;
                candidates.push((x, y));
            }
            y_eliminant = compose_line(&ex, &a, &b);
            x_eliminant = ex;
        } else {
            let c = -&c0 / &c1;
            let ey = gcd_all(rels.iter().map(|p| p.substitute_x(&c)))
                .ok_or(VarietyError::InfiniteVariety)?;
            for y in refined_roots(&ey, REFINED_BITS)? {
                candidates.push((c.clone(), y));
            }
            x_eliminant = UniPoly::new(vec![-c, Rational::one()]);
            y_eliminant = ey;
        }
    } else {
        let ex = eliminant(&rels, true).ok_or(VarietyError::InfiniteVariety)?;
        let ey = eliminant(&rels, false).ok_or(VarietyError::InfiniteVariety)?;
        let xs = refined_roots(&ex, REFINED_BITS)?;
        let ys = refined_roots(&ey, REFINED_BITS)?;
        for x in &xs {
            for y in &ys {
                candidates.push((x.clone(), y.clone()));
            }
        }
        x_eliminant = ex;
        y_eliminant = ey;
    }

    let mut found: Vec<((f64, f64), (Rational, Rational), f64)> = Vec::new();
    for (qx, qy) in candidates {
        let (x, y) = (to_f64(&qx), to_f64(&qy));
        let residual = rels
            .iter()
            .map(|p| accepts(p, x, y, tol))
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
        let Some(residual) = residual else { continue };
        let dup = found
            .iter()
            .any(|((u, v), _, _)| (u - x).abs().max((v - y).abs()) <= ATOM_MERGE_TOL);
        if !dup {
            found.push(((x, y), (qx, qy), residual));
        }
    }
    found.sort_by(|(p, _, _), (q, _, _)| p.partial_cmp(q).unwrap_or(Ordering::Equal));
    let mut points = Vec::with_capacity(found.len());
    let mut refined = Vec::with_capacity(found.len());
    let mut residuals = Vec::with_capacity(found.len());
    for (p, q, r) in found {
        points.push(p);
        refined.push(q);
        residuals.push(r);
    }
    Ok(VarietyResult {
        points,
        refined,
        residuals,
        x_eliminant: x_eliminant.square_free(),
        y_eliminant: y_eliminant.square_free(),
    })
}

/// Polynomial in `y` whose roots are `a + b·x` over the roots `x` of `ex`
/// (for `b ≠ 0`), or `y - a` when `b = 0`.
fn compose_line(ex: &UniPoly, a: &Rational, b: &Rational) -> UniPoly {
    if b.is_zero() {
        return UniPoly::new(vec![-a.clone(), Rational::one()]);
    }
    // x = (y - a) / b
    let inv = UniPoly::new(vec![-a / b, b.recip()]);
    ex.coeffs()
        .iter()
        .enumerate()
        .fold(UniPoly::zero(), |acc, (k, c)| acc.add(&inv.pow(k).scale(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;
    use crate::poly::Monomial;

    fn poly(terms: &[((u32, u32), i64)]) -> Poly2 {
        Poly2::from_terms(terms.iter().map(|&((x, y), c)| (Monomial::new(x, y), int(c))))
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() < tol)
    }

    #[test]
    fn refined_sqrt_two() {
        let u = UniPoly::new(vec![int(-2), int(0), int(1)]);
        let roots = refined_roots(&u, REFINED_BITS).unwrap();
        assert_eq!(roots.len(), 2);
        let err = (&roots[1] * &roots[1] - int(2)).abs();
        let bound = Rational::new(1.into(), num_traits::pow(BigInt::from(2), REFINED_BITS - 3));
        assert!(err < bound);
        assert!(roots[0] < int(0));
        // a rational root is hit exactly
        let v = UniPoly::new(vec![rat(-3, 4), int(1)]);
        assert_eq!(refined_roots(&v, REFINED_BITS).unwrap(), vec![rat(3, 4)]);
    }

    #[test]
    fn resultant_of_line_and_parabola() {
        // p = x + 2y - 1, q = x^2 - 1. Sylvester in y: deg_y p = 1, q is
        // y-free, so Res = q^1.
        let p = poly(&[((1, 0), 1), ((0, 1), 2), ((0, 0), -1)]);
        let q = poly(&[((2, 0), 1), ((0, 0), -1)]);
        let r = resultant_y(&p, &q).unwrap();
        assert_eq!(r, UniPoly::from_ints(&[-1, 0, 1]));
        assert!(close(&real_roots(&r, ROOT_TOL).unwrap(), &[-1.0, 1.0], 1e-12));
    }

    #[test]
    fn resultant_two_quadrics_by_hand() {
        // p = y^2 - x, q = y - x: Res_y = x^2 - x.
        let p = poly(&[((0, 2), 1), ((1, 0), -1)]);
        let q = poly(&[((0, 1), 1), ((1, 0), -1)]);
        assert_eq!(resultant_y(&p, &q).unwrap(), UniPoly::from_ints(&[0, -1, 1]));
        // Res_x: p = -x + y^2, q = -x + y gives y - y^2 up to sign.
        let rx = resultant_x(&p, &q).unwrap();
        assert_eq!(rx.monic(), UniPoly::from_ints(&[0, -1, 1]));
    }

    #[test]
    fn common_factor_is_identically_zero() {
        let p = poly(&[((1, 1), 1), ((0, 0), -1)]);
        assert_eq!(resultant_y(&p, &p), Err(VarietyError::IdenticallyZero));
        let q = p.mul_monomial(Monomial::X);
        assert_eq!(resultant_x(&p, &q), Err(VarietyError::IdenticallyZero));
    }

    #[test]
    fn quartic_from_four_point_relations() {
        // X^2 = 3/4 - X/4 + 3Y/4 and Y^2 = 3/4 - X/4 + 3Y/4.
        let mut p = poly(&[((2, 0), 4), ((1, 0), 1), ((0, 1), -3), ((0, 0), -3)]);
        let mut q = poly(&[((0, 2), 4), ((1, 0), 1), ((0, 1), -3), ((0, 0), -3)]);
        p = p.scale(&rat(1, 4));
        q = q.scale(&rat(1, 4));
        let r = resultant_y(&p, &q).unwrap();
        assert_eq!(r.degree(), Some(4));
        let s13 = 13f64.sqrt();
        let expected = [-1.5, (1.0 - s13) / 4.0, 0.5, (1.0 + s13) / 4.0];
        assert!(close(&real_roots(&r, ROOT_TOL).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn real_roots_basic() {
        assert!(close(
            &real_roots(&UniPoly::from_ints(&[-1, 0, 1]), ROOT_TOL).unwrap(),
            &[-1.0, 1.0],
            1e-12
        ));
        // (x - 2)^2: double root once.
        assert_eq!(real_roots(&UniPoly::from_ints(&[4, -4, 1]), ROOT_TOL).unwrap(), vec![2.0]);
        assert!(real_roots(&UniPoly::from_ints(&[1, 0, 1]), ROOT_TOL).unwrap().is_empty());
        assert!(real_roots(&UniPoly::from_ints(&[3]), ROOT_TOL).unwrap().is_empty());
        assert_eq!(real_roots(&UniPoly::zero(), ROOT_TOL), Err(VarietyError::ZeroPolynomial));
    }

    #[test]
    fn real_roots_scaled_quartic() {
        // 16(x + 3/2)(x - 1/2)(x^2 - x/2 - 3/4)
        let u = UniPoly::from_ints(&[9, -6, -32, 8, 16]);
        let s13 = 13f64.sqrt();
        let expected = [-1.5, (1.0 - s13) / 4.0, 0.5, (1.0 + s13) / 4.0];
        let roots = real_roots(&u, ROOT_TOL).unwrap();
        assert!(close(&roots, &expected, 1e-12), "{roots:?}");
    }

    #[test]
    fn real_roots_close_pair() {
        // (x - 1)(x - 1 - 1e-6) with rational coefficients.
        let e = rat(1, 1_000_000);
        let u = UniPoly::new(vec![int(1) + &e, -(int(2) + &e), int(1)]);
        let roots = real_roots(&u, ROOT_TOL).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[1] - roots[0] - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn zeros_via_line() {
        // Y = 1/2 - X/2, X^2 = 1 and the consequences on degree two.
        let rels = vec![
            poly(&[((0, 1), 2), ((1, 0), 1), ((0, 0), -1)]),
            poly(&[((2, 0), 1), ((0, 0), -1)]),
            poly(&[((1, 1), 2), ((1, 0), -1), ((0, 0), 1)]),
        ];
        let v = common_zeros(&rels, 1e-9).unwrap();
        assert_eq!(v.points, vec![(-1.0, 1.0), (1.0, 0.0)]);
        assert!(v.residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn zeros_three_points() {
        let pts = [(0i64, 1i64), (1, -1), (1, 0)];
        let a = poly(&[((2, 0), 1), ((1, 0), -1)]);
        let b = poly(&[((0, 2), 1), ((1, 1), 1), ((1, 0), 1), ((0, 0), -1)]);
        // (X - 1)(Y - 1)
        let c = poly(&[((1, 1), 1), ((1, 0), -1), ((0, 1), -1), ((0, 0), 1)]);
        for &(x, y) in &pts {
            for p in [&a, &b, &c] {
                assert!(p.eval(&int(x), &int(y)).is_zero());
            }
        }
        let v = common_zeros(&[a, b, c], 1e-9).unwrap();
        assert_eq!(v.points, vec![(0.0, 1.0), (1.0, -1.0), (1.0, 0.0)]);
    }

    #[test]
    fn curve_is_infinite() {
        let p = poly(&[((2, 0), 1), ((0, 2), 1), ((0, 0), -1)]);
        let q = p.mul_monomial(Monomial::X);
        assert_eq!(common_zeros(&[p, q], 1e-9), Err(VarietyError::InfiniteVariety));
        assert_eq!(common_zeros(&[], 1e-9), Err(VarietyError::InfiniteVariety));
        let line = poly(&[((1, 0), 1), ((0, 1), 1)]);
        let on_line = line.mul_monomial(Monomial::Y);
        assert_eq!(common_zeros(&[line, on_line], 1e-9), Err(VarietyError::InfiniteVariety));
    }

    #[test]
    fn vertical_line() {
        // X = 2 and Y^2 = 1.
        let rels = vec![poly(&[((1, 0), 1), ((0, 0), -2)]), poly(&[((0, 2), 1), ((0, 0), -1)])];
        let v = common_zeros(&rels, 1e-9).unwrap();
        assert_eq!(v.points, vec![(2.0, -1.0), (2.0, 1.0)]);
        assert_eq!(v.x_eliminant, UniPoly::from_ints(&[-2, 1]));
    }
}
