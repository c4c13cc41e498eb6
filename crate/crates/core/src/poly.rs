//! Monomials and exact polynomials in one and two variables.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::linalg::{int, to_f64, Rational};

/// `X^x Y^y`. Ordered by total degree, then by descending power of `X`,
/// which gives 1, X, Y, X², XY, Y², X³, X²Y, …
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub x: u32,
    pub y: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { x: 0, y: 0 };
    pub const X: Monomial = Monomial { x: 1, y: 0 };
    pub const Y: Monomial = Monomial { x: 0, y: 1 };

    pub const fn new(x: u32, y: u32) -> Self {
        Monomial { x, y }
    }

    pub fn degree(self) -> u32 {
        self.x + self.y
    }

    pub fn times(self, other: Monomial) -> Monomial {
        Monomial::new(self.x + other.x, self.y + other.y)
    }

    /// All monomials of total degree `<= n`, in the order above.
    pub fn up_to(n: u32) -> Vec<Monomial> {
        (0..=n)
            .flat_map(|d| (0..=d).map(move |j| Monomial::new(d - j, j)))
            .collect()
    }

    pub fn eval_f64(self, x: f64, y: f64) -> f64 {
        x.powi(self.x as i32) * y.powi(self.y as i32)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then(other.x.cmp(&self.x))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        for (name, p) in [("X", self.x), ("Y", self.y)] {
            match p {
                0 => {}
                1 => write!(f, "{name}")?,
                _ => write!(f, "{name}^{p}")?,
            }
        }
        Ok(())
    }
}

/// Sparse bivariate polynomial with rational coefficients. Zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly2 {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: Monomial) -> Rational {
        self.terms.get(&m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, &Rational)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn degree_in_x(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.x).max()
    }

    pub fn degree_in_y(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.y).max()
    }

    pub fn scale(&self, c: &Rational) -> Poly2 {
        Poly2::from_terms(self.terms().map(|(m, v)| (m, v * c)))
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let mut p = self.clone();
        for (m, c) in other.terms() {
            p.add_term(m, c.clone());
        }
        p
    }

    pub fn mul_monomial(&self, q: Monomial) -> Poly2 {
        Poly2::from_terms(self.terms().map(|(m, c)| (m.times(q), c.clone())))
    }

    pub fn eval(&self, x: &Rational, y: &Rational) -> Rational {
        self.terms()
            .map(|(m, c)| c * num_traits::pow(x.clone(), m.x as usize) * num_traits::pow(y.clone(), m.y as usize))
            .sum()
    }

    pub fn eval_f64(&self, x: f64, y: f64) -> f64 {
        self.terms().map(|(m, c)| to_f64(c) * m.eval_f64(x, y)).sum()
    }

    /// Sum of absolute coefficient values.
    pub fn norm1(&self) -> f64 {
        self.terms.values().map(|c| to_f64(c).abs()).sum()
    }

    /// Coefficients of `Y^k` as polynomials in `X`, `k = 0..=deg_Y`.
    pub fn coeffs_in_y(&self) -> Vec<UniPoly> {
        self.split(|m| (m.y, m.x))
    }

    /// Coefficients of `X^k` as polynomials in `Y`.
    pub fn coeffs_in_x(&self) -> Vec<UniPoly> {
        self.split(|m| (m.x, m.y))
    }

    fn split(&self, key: impl Fn(Monomial) -> (u32, u32)) -> Vec<UniPoly> {
        let Some(top) = self.terms.keys().map(|&m| key(m).0).max() else {
            return Vec::new();
        };
        let mut raw = vec![Vec::<Rational>::new(); top as usize + 1];
        for (m, c) in self.terms() {
            let (outer, inner) = key(m);
            let slot = &mut raw[outer as usize];
            if slot.len() <= inner as usize {
                slot.resize(inner as usize + 1, Rational::zero());
            }
            slot[inner as usize] += c;
        }
        raw.into_iter().map(UniPoly::new).collect()
    }

    /// `P(x, a + b·x)` as a polynomial in `x`.
    pub fn substitute_y(&self, a: &Rational, b: &Rational) -> UniPoly {
        let line = UniPoly::new(vec![a.clone(), b.clone()]);
        self.coeffs_in_y()
            .iter()
            .enumerate()
            .fold(UniPoly::zero(), |acc, (k, cx)| acc.add(&cx.mul(&line.pow(k))))
    }

    /// `P(c, y)` as a polynomial in `y`.
    pub fn substitute_x(&self, c: &Rational) -> UniPoly {
        UniPoly::new(self.coeffs_in_y().iter().map(|cx| cx.eval(c)).collect())
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Highest degree first, the way relations are usually read.
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.degree() == 0 {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Dense univariate polynomial, lowest degree first, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + to_f64(c))
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * int(k as i64))
                .collect(),
        )
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new(
            (0..n)
                .map(|k| {
                    let a = self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero);
                    let b = other.coeffs.get(k).cloned().unwrap_or_else(Rational::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|v| v * c).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn pow(&self, k: usize) -> UniPoly {
        (0..k).fold(UniPoly::constant(int(1)), |acc, _| acc.mul(self))
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        let n = self.coeffs.len();
        if n <= dd {
            return (UniPoly::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); n - dd];
        for k in (0..n - dd).rev() {
            let c = &rem[k + dd] / &lead;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &c * dc;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    /// Division known to be exact; panics otherwise.
    pub fn exact_div(&self, d: &UniPoly) -> UniPoly {
        let (q, r) = self.div_rem(d);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> UniPoly {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => UniPoly::zero(),
        }
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Product of the distinct irreducible factors (monic).
    pub fn square_free(&self) -> UniPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.exact_div(&g).monic()
    }

    /// Sturm chain `p, p', -rem(p, p'), …`, each term normalised by a
    /// positive factor.
    pub fn sturm_chain(&self) -> Vec<UniPoly> {
        let normalise = |p: UniPoly| match p.leading() {
            Some(l) => {
                let s = l.abs().recip();
                p.scale(&s)
            }
            None => p,
        };
        let mut chain = vec![normalise(self.clone())];
        let d = self.derivative();
        if d.is_zero() {
            return chain;
        }
        chain.push(normalise(d));
        loop {
            let n = chain.len();
            let r = chain[n - 2].div_rem(&chain[n - 1]).1;
            if r.is_zero() {
                break;
            }
            chain.push(normalise(r.neg()));
        }
        chain
    }

    /// Cauchy bound: every real root lies strictly inside `(-B, B)`.
    pub fn root_bound(&self) -> Rational {
        let Some(lead) = self.leading() else {
            return int(1);
        };
        let lead = lead.abs();
        let max = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(Rational::zero);
        max + int(1)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let abs = c.abs();
            if k == 0 || !abs.is_one() {
                write!(f, "{abs}")?;
                if k > 0 {
                    write!(f, "*")?;
                }
            }
            match k {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;

    #[test]
    fn monomial_order_is_graded_lex() {
        let names: Vec<String> = Monomial::up_to(3).iter().map(|m| m.to_string()).collect();
        assert_eq!(
            names,
            ["1", "X", "Y", "X^2", "XY", "Y^2", "X^3", "X^2Y", "XY^2", "Y^3"]
        );
        let mut sorted = Monomial::up_to(4);
        sorted.reverse();
        sorted.sort();
        assert_eq!(sorted, Monomial::up_to(4));
    }

    #[test]
    fn division_and_gcd() {
        // (x-1)^2 (x+2)
        let p = UniPoly::from_ints(&[2, -3, 0, 1]);
        let (q, r) = p.div_rem(&UniPoly::from_ints(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(q, UniPoly::from_ints(&[-2, 1, 1]));
        assert_eq!(p.gcd(&p.derivative()), UniPoly::from_ints(&[-1, 1]));
        assert_eq!(p.square_free(), UniPoly::from_ints(&[-2, 1, 1]));
    }

    #[test]
    fn substitution() {
        // x + 2y - 1 with y = (1 - x)/2 vanishes identically
        let p = Poly2::from_terms([
            (Monomial::X, int(1)),
            (Monomial::Y, int(2)),
            (Monomial::ONE, int(-1)),
        ]);
        assert!(p.substitute_y(&rat(1, 2), &rat(-1, 2)).is_zero());
        // y^2 + x at x = 3 -> y^2 + 3
        let q = Poly2::from_terms([(Monomial::new(0, 2), int(1)), (Monomial::X, int(1))]);
        assert_eq!(q.substitute_x(&int(3)), UniPoly::from_ints(&[3, 0, 1]));
    }

    #[test]
    fn display() {
        let p = Poly2::from_terms([
            (Monomial::new(2, 0), int(1)),
            (Monomial::X, rat(1, 4)),
            (Monomial::Y, rat(-3, 4)),
            (Monomial::ONE, rat(-3, 4)),
        ]);
        assert_eq!(p.to_string(), "X^2 - 3/4*Y + 1/4*X - 3/4");
        assert_eq!(UniPoly::from_ints(&[-1, 0, 1]).to_string(), "x^2 - 1");
    }
}
