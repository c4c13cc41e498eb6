//! From a flat extension to an atomic measure, and the end-to-end solver.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::extension::{
    classify, extend, extract_relations, m1_negative_direction, range_exclusion_witness, ClassTag,
    ExtensionCertificate, ExtensionError,
};
use crate::linalg::{solve as solve_exact, to_f64, Matrix, Rational};
use crate::moments::{build_m1, moments_from_measure, AtomicMeasure, MomentError, MomentSequence3, Scalar};
use crate::poly::Monomial;
use crate::variety::{common_zeros, VarietyError, VarietyResult};

/// Default verification tolerance: `|computed - β| <= tol·(1 + |β|)`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Residual tolerance for accepting variety points.
pub const VARIETY_TOL: f64 = 1e-8;

/// Vandermonde systems with `σ_min / σ_max` below this are rejected.
pub const VANDERMONDE_RCOND: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error("variety has {found} points, flat extension has rank {expected}")]
    CardinalityMismatch { expected: usize, found: usize },
    #[error("Vandermonde system is numerically singular (rcond {rcond:.3e})")]
    SingularVandermonde { rcond: f64 },
    #[error("weight {index} is not positive ({value})")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("atom and basis counts differ ({atoms} vs {basis})")]
    ShapeMismatch { atoms: usize, basis: usize },
    #[error("recovered measure fails verification (max relative error {max_rel_error:.3e})")]
    VerificationFailed { max_rel_error: f64 },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// Which necessary condition the data violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoMeasureReason {
    M1NotPsd,
    RangeInclusionFails,
}

impl fmt::Display for NoMeasureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoMeasureReason::M1NotPsd => "M1NotPsd",
            NoMeasureReason::RangeInclusionFails => "RangeInclusionFails",
        })
    }
}

/// Exact evidence for a [`NoMeasureReason`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoMeasureWitness {
    /// `vᵀ M(1) v = value < 0`.
    NegativeDirection { v: Vec<Rational>, value: Rational },
    /// `M(1) v = 0` but `vᵀ B(2) = leak ≠ 0`.
    KernelLeak { v: Vec<Rational>, leak: Vec<Rational> },
}

impl fmt::Display for NoMeasureWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[Rational]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        match self {
            NoMeasureWitness::NegativeDirection { v, value } => {
                write!(f, "v = ({}) gives vᵀ M(1) v = {value}", list(v))
            }
            NoMeasureWitness::KernelLeak { v, leak } => {
                write!(f, "v = ({}) spans ker M(1) but vᵀ B(2) = ({})", list(v), list(leak))
            }
        }
    }
}

/// A representing measure and the data that certifies it.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub measure: AtomicMeasure<f64>,
    /// Same measure with rational atoms and weights, when every atom is
    /// rational.
    pub exact: Option<AtomicMeasure<Rational>>,
    pub certificate: ExtensionCertificate,
    pub variety: VarietyResult,
    pub report: VerifyReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Measure(Box<Solution>),
    NoMeasure {
        reason: NoMeasureReason,
        witness: NoMeasureWitness,
    },
}

impl SolveOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolveOutcome::Measure(s) => Some(s),
            SolveOutcome::NoMeasure { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub monomial: Monomial,
    pub expected: f64,
    pub computed: f64,
    pub abs_error: f64,
    /// `abs_error / (1 + |expected|)`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub pass: bool,
    pub tol: f64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub checks: Vec<MomentCheck>,
}

/// Weights `ρ` with `Σ_j ρ_j c_k(atom_j) = L(c_k)` for every basis monomial
/// `c_k`.
pub fn solve_weights(
    atoms: &[(f64, f64)],
    basis: &[Monomial],
    riesz_values: &[f64],
) -> Result<Vec<f64>, SolveError> {
    let r = basis.len();
    if atoms.len() != r || riesz_values.len() != r {
        return Err(SolveError::ShapeMismatch {
            atoms: atoms.len(),
            basis: r,
        });
    }
    let v = DMatrix::from_fn(r, r, |k, j| basis[k].eval_f64(atoms[j].0, atoms[j].1));
    let sv = v.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond >= VANDERMONDE_RCOND) {
        return Err(SolveError::SingularVandermonde { rcond });
    }
    let rhs = DVector::from_column_slice(riesz_values);
    let rho = v
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(SolveError::SingularVandermonde { rcond })?;
    for (index, &value) in rho.iter().enumerate() {
        if !(value > 0.0) {
            return Err(SolveError::NonpositiveWeight { index, value });
        }
    }
    Ok(rho.iter().copied().collect())
}

/// Weights on the refined variety points. Conditioning is judged on the
/// float Vandermonde matrix; the system itself is solved exactly so that
/// atoms far from the origin keep full relative accuracy.
fn refined_weights(
    s: &MomentSequence3,
    basis: &[Monomial],
    variety: &VarietyResult,
) -> Result<Vec<Rational>, SolveError> {
    let r = basis.len();
    let atoms = &variety.points;
    if atoms.len() != r {
        return Err(SolveError::ShapeMismatch {
            atoms: atoms.len(),
            basis: r,
        });
    }
    let vf = DMatrix::from_fn(r, r, |k, j| basis[k].eval_f64(atoms[j].0, atoms[j].1));
    let sv = vf.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond >= VANDERMONDE_RCOND) {
        return Err(SolveError::SingularVandermonde { rcond });
    }
    let v = Matrix::from_fn(r, r, |k, j| {
        let (x, y) = &variety.refined[j];
        num_traits::pow(x.clone(), basis[k].x as usize) * num_traits::pow(y.clone(), basis[k].y as usize)
    });
    let rhs = Matrix::from_fn(r, 1, |k, _| s.get(basis[k].x, basis[k].y).clone());
    let rho = solve_exact(&v, &rhs).ok_or(SolveError::SingularVandermonde { rcond })?;
    (0..r)
        .map(|index| {
            let w = &rho[(index, 0)];
            let value = to_f64(w);
            if w.is_positive() && value > 0.0 {
                Ok(w.clone())
            } else {
                Err(SolveError::NonpositiveWeight { index, value })
            }
        })
        .collect()
}

/// Compares the measure's moments of degree <= 3 with `s`.
pub fn verify_measure<T: Scalar>(s: &MomentSequence3, m: &AtomicMeasure<T>, tol: f64) -> VerifyReport {
    let computed = moments_from_measure(m, 3);
    let checks: Vec<MomentCheck> = s
        .iter()
        .map(|(mon, beta)| {
            let c = &computed[&mon];
            let diff = (c.clone() - T::from_rational(beta)).to_f64_lossy().abs();
            let expected = to_f64(beta);
            MomentCheck {
                monomial: mon,
                expected,
                computed: c.to_f64_lossy(),
                abs_error: diff,
                rel_error: diff / (1.0 + expected.abs()),
            }
        })
        .collect();
    let max_abs_error = checks.iter().map(|c| c.abs_error).fold(0.0, f64::max);
    let max_rel_error = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    let pass = checks.iter().all(|c| c.rel_error <= tol);
    VerifyReport {
        pass,
        tol,
        max_abs_error,
        max_rel_error,
        checks,
    }
}

/// Rational version of the recovered measure when every refined point is an
/// exact common zero of the relations (so the rational weights are exact).
fn exact_measure(
    s: &MomentSequence3,
    cert: &ExtensionCertificate,
    points: &[(Rational, Rational)],
    weights: &[Rational],
) -> Option<AtomicMeasure<Rational>> {
    let on_variety = points
        .iter()
        .all(|(x, y)| cert.relations.iter().all(|r| r.poly.eval(x, y).is_zero()));
    if !on_variety {
        return None;
    }
    let m = AtomicMeasure::new(points.to_vec(), weights.to_vec()).ok()?;
    (verify_measure(s, &m, 0.0).pass).then_some(m)
}

/// Decides whether `s` has a representing measure and, if so, builds one
/// with `rank M(1)` atoms (flat case) or four atoms (otherwise).
pub fn solve(s: &MomentSequence3, tol: f64) -> Result<SolveOutcome, SolveError> {
    let cls = classify(s);
    match cls.tag {
        ClassTag::NotPsd => {
            let v = m1_negative_direction(s).expect("indefinite M(1) has a witness");
            let value = build_m1(s).matrix().quadratic_form(&v);
            return Ok(SolveOutcome::NoMeasure {
                reason: NoMeasureReason::M1NotPsd,
                witness: NoMeasureWitness::NegativeDirection { v, value },
            });
        }
        ClassTag::NoRangeInclusion => {
            let (v, leak) = range_exclusion_witness(s).expect("range failure has a kernel witness");
            return Ok(SolveOutcome::NoMeasure {
                reason: NoMeasureReason::RangeInclusionFails,
                witness: NoMeasureWitness::KernelLeak { v, leak },
            });
        }
        _ => {}
    }

    let certificate = extend(s)?;
    let rank = certificate.rank_m2;
    let polys: Vec<_> = certificate.relations.iter().map(|r| r.poly.clone()).collect();
    let variety = match common_zeros(&polys, VARIETY_TOL) {
        Err(VarietyError::InfiniteVariety) => {
            common_zeros(&extract_relations(&certificate.m3).polys(), VARIETY_TOL)?
        }
        other => other?,
    };
    if variety.points.len() != rank {
        return Err(SolveError::CardinalityMismatch {
            expected: rank,
            found: variety.points.len(),
        });
    }

    let rho = refined_weights(s, &certificate.basis, &variety)?;
    let weights = rho.iter().map(to_f64).collect();
    let measure = AtomicMeasure::new(variety.points.clone(), weights)?;
    if measure.len() != rank {
        return Err(SolveError::CardinalityMismatch {
            expected: rank,
            found: measure.len(),
        });
    }
    let exact = exact_measure(s, &certificate, &variety.refined, &rho);
    let report = match &exact {
        Some(m) => verify_measure(s, m, tol),
        None => verify_measure(s, &measure, tol),
    };
    if !report.pass {
        return Err(SolveError::VerificationFailed {
            max_rel_error: report.max_rel_error,
        });
    }
    let measure = match &exact {
        Some(m) => m.to_f64(),
        None => measure,
    };
    Ok(SolveOutcome::Measure(Box::new(Solution {
        measure,
        exact,
        certificate,
        variety,
        report,
    })))
}

/// Sum of the weights.
pub fn total_mass(m: &AtomicMeasure<f64>) -> f64 {
    m.weights().iter().sum()
}

impl VerifyReport {
    pub fn failing(&self) -> impl Iterator<Item = &MomentCheck> {
        self.checks.iter().filter(move |c| c.rel_error > self.tol)
    }
}

impl MomentCheck {
    pub fn label(&self) -> String {
        format!("{},{}", self.monomial.x, self.monomial.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat};

    fn seq(v: [i64; 10]) -> MomentSequence3 {
        MomentSequence3::from_ints(v).unwrap()
    }

    fn measure(atoms: &[(f64, f64)], w: &[f64]) -> AtomicMeasure<f64> {
        AtomicMeasure::new(atoms.to_vec(), w.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tiny_weight_far_out() {
        // Four atoms, one near (4.725, 525.49) carrying weight ~4.5e-8; its
        // cubic moment contribution is ~6.5, so float weights fall short.
        let b = [
            (21, 1), (-23, 8), (75, 8), (10327, 32), (-1595, 32),
            (317, 16), (-17663, 128), (10725, 128), (347, 64), (381, 32),
        ];
        let s = MomentSequence3::new(b.map(|(p, q)| rat(p, q))).unwrap();
        let sol = solve(&s, DEFAULT_TOL).unwrap();
        let sol = sol.solution().expect("measure");
        assert_eq!(sol.certificate.classification.tag, ClassTag::Less);
        assert_eq!(sol.measure.len(), 4);
        assert!(sol.measure.atoms().iter().any(|a| a.1 > 500.0));
        assert!(sol.report.max_rel_error <= 1e-12, "{:?}", sol.report);
    }

    #[test]
    fn weights_two_atoms() {
        let rho = solve_weights(&[(1.0, 0.0), (-1.0, 1.0)], &[Monomial::ONE, Monomial::X], &[5.0, 1.0]).unwrap();
        assert!(close(rho[0], 3.0, 1e-12) && close(rho[1], 2.0, 1e-12));
    }

    #[test]
    fn weights_three_atoms() {
        let rho = solve_weights(
            &[(0.0, 1.0), (1.0, -1.0), (1.0, 0.0)],
            &[Monomial::ONE, Monomial::X, Monomial::Y],
            &[3.0, 2.0, 0.0],
        )
        .unwrap();
        for w in rho {
            assert!(close(w, 1.0, 1e-12));
        }
    }

    #[test]
    fn weights_four_atoms() {
        let s13 = 13f64.sqrt();
        let (p, m) = ((1.0 + s13) / 4.0, (1.0 - s13) / 4.0);
        let atoms = [(-1.5, 1.5), (0.5, -0.5), (m, m), (p, p)];
        let basis = [Monomial::ONE, Monomial::X, Monomial::Y, Monomial::new(1, 1)];
        let rho = solve_weights(&atoms, &basis, &[2.0, 1.0, 1.0, 1.0]).unwrap();
        let expected = [1.0 / 6.0, 0.5, (26.0 - 4.0 * s13) / 39.0, (26.0 + 4.0 * s13) / 39.0];
        for (w, e) in rho.iter().zip(expected) {
            assert!(close(*w, e, 1e-12), "{rho:?}");
        }
    }

    #[test]
    fn weights_failures() {
        let basis = [Monomial::ONE, Monomial::X];
        assert!(matches!(
            solve_weights(&[(1.0, 0.0), (1.0, 5.0)], &basis, &[1.0, 1.0]),
            Err(SolveError::SingularVandermonde { .. })
        ));
        assert!(matches!(
            solve_weights(&[(0.0, 0.0), (1.0, 0.0)], &basis, &[1.0, 2.0]),
            Err(SolveError::NonpositiveWeight { index: 0, .. })
        ));
        assert!(matches!(
            solve_weights(&[(0.0, 0.0)], &basis, &[1.0, 2.0]),
            Err(SolveError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn verify_examples() {
        let s = seq([5, 1, 2, 5, -2, 2, 1, 2, -2, 2]);
        let good = verify_measure(&s, &measure(&[(1.0, 0.0), (-1.0, 1.0)], &[3.0, 2.0]), DEFAULT_TOL);
        assert!(good.pass);
        assert_eq!(good.max_abs_error, 0.0);
        let bad = verify_measure(&s, &measure(&[(0.0, 0.0)], &[5.0]), DEFAULT_TOL);
        assert!(!bad.pass);
        let b10 = bad.checks.iter().find(|c| c.monomial == Monomial::X).unwrap();
        assert_eq!((b10.expected, b10.computed), (1.0, 0.0));
    }

    #[test]
    fn verify_exact_measure() {
        let m = AtomicMeasure::new(
            vec![(int(0), int(1)), (int(1), int(-1)), (int(1), int(0))],
            vec![int(1), int(1), int(1)],
        )
        .unwrap();
        let s = seq([3, 2, 0, 2, -1, 2, 2, -1, 1, 0]);
        let r = verify_measure(&s, &m, 0.0);
        assert!(r.pass);
        assert_eq!(r.max_abs_error, 0.0);
    }

    #[test]
    fn solve_point_mass_at_origin() {
        let out = solve(&seq([1, 0, 0, 0, 0, 0, 0, 0, 0, 0]), DEFAULT_TOL).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!(sol.measure.atoms(), &[(0.0, 0.0)]);
        assert_eq!(sol.measure.weights(), &[1.0]);
        assert!(sol.exact.is_some());
    }

    #[test]
    fn solve_negative_second_moment() {
        let out = solve(&seq([1, 0, 0, -1, 0, 0, 0, 0, 0, 0]), DEFAULT_TOL).unwrap();
        match out {
            SolveOutcome::NoMeasure {
                reason: NoMeasureReason::M1NotPsd,
                witness: NoMeasureWitness::NegativeDirection { value, .. },
            } => assert!(value.is_negative()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn solve_reports_mass() {
        let out = solve(&seq([2, 1, 1, 2, 1, 2, 1, 2, 1, 2]), DEFAULT_TOL).unwrap();
        let sol = out.solution().unwrap();
        assert_eq!(sol.measure.len(), 4);
        assert!(close(total_mass(&sol.measure), 2.0, 1e-9));
        assert!(sol.exact.is_none());
    }
}
