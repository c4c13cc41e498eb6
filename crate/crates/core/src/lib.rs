//! Exact solver for the bivariate cubic truncated moment problem.
//!
//! Given ten real numbers `β_ij` (`i + j <= 3`), [`solve`] either produces a
//! finitely atomic positive measure on the plane with exactly those moments,
//! together with a certificate (flat moment matrices, column relations,
//! atoms and weights), or an exact witness that no representing measure
//! exists. All algebra up to the atoms is done over the rationals.

pub mod extension;
pub mod linalg;
pub mod moments;
pub mod poly;
pub mod recovery;
pub mod variety;

pub use extension::{
    choose_c2, classify, compute_schur, extend, extract_relations, build_flat_m3, rank_delta,
    ClassTag, Classification, ColumnRelations, ExtensionCertificate, ExtensionError, RelationPoly,
    SchurData,
};
pub use linalg::{int, rat, Matrix, Rational, SymMatrix};
pub use moments::{
    assemble_m2, build_b2, build_m1, moments_from_measure, riesz, AtomicMeasure, MomentError,
    MomentMatrix, MomentSequence3, Scalar,
};
pub use poly::{Monomial, Poly2, UniPoly};
pub use recovery::{
    solve, solve_weights, verify_measure, MomentCheck, NoMeasureReason, NoMeasureWitness,
    SolveError, SolveOutcome, Solution, VerifyReport, DEFAULT_TOL,
};
pub use variety::{common_zeros, real_roots, resultant_x, resultant_y, VarietyError, VarietyResult};
