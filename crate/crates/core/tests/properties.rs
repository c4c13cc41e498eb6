use cubic_moment::linalg::{congruence, int, is_psd, null_space, rank, rat, solve_sym, to_f64, Matrix, SymMatrix};
use cubic_moment::{
    build_b2, build_m1, classify, compute_schur, resultant_y, solve, verify_measure, AtomicMeasure,
    ClassTag, Monomial, MomentSequence3, Poly2, Rational, SolveOutcome,
};
use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn small_rat(rng: &mut StdRng, num: i64, den: i64) -> Rational {
    rat(rng.random_range(-num..=num), rng.random_range(1..=den))
}

fn nonzero_rat(rng: &mut StdRng, num: i64, den: i64) -> Rational {
    loop {
        let r = small_rat(rng, num, den);
        if !r.is_zero() {
            return r;
        }
    }
}

fn from_blocks(m1: [[Rational; 3]; 3], b2: [[Rational; 3]; 3]) -> MomentSequence3 {
    // β00 β10 β01 β20 β11 β02 β30 β21 β12 β03
    MomentSequence3::new([
        m1[0][0].clone(),
        m1[0][1].clone(),
        m1[0][2].clone(),
        b2[0][0].clone(),
        b2[0][1].clone(),
        b2[0][2].clone(),
        b2[1][0].clone(),
        b2[1][1].clone(),
        b2[1][2].clone(),
        b2[2][2].clone(),
    ])
    .unwrap()
}

fn flat_instance(s: &MomentSequence3, expected_rank: usize) {
    let cls = classify(s);
    assert_eq!(cls.rank_m1, expected_rank);
    assert_eq!(cls.tag, ClassTag::FlatEqual);
    let sd = compute_schur(s).unwrap();
    assert_eq!(sd.b, sd.y);
    let out = solve(s, 1e-9).unwrap();
    let sol = out.solution().expect("flat data has a measure");
    assert_eq!(sol.measure.len(), expected_rank);
}

#[test]
fn singular_m1_forces_b_equal_y() {
    let mut rng = StdRng::seed_from_u64(0x3a4);
    let mut count = 0;

    // rank 1: a point mass at (c, d)
    for _ in 0..70 {
        let (c, d) = (nonzero_rat(&mut rng, 9, 4), nonzero_rat(&mut rng, 9, 4));
        let (c2, d2, cd) = (&c * &c, &d * &d, &c * &d);
        let m1 = [
            [int(1), c.clone(), d.clone()],
            [c.clone(), c2.clone(), cd.clone()],
            [d.clone(), cd.clone(), d2.clone()],
        ];
        let b2 = [
            [c2.clone(), cd.clone(), d2.clone()],
            [&c2 * &c, &c2 * &d, &c * &d2],
            [&c2 * &d, &c * &d2, &d2 * &d],
        ];
        flat_instance(&from_blocks(m1, b2), 1);
        count += 1;
    }

    // rank 2 with X = c·1
    for _ in 0..65 {
        let (c, d) = (small_rat(&mut rng, 9, 4), small_rat(&mut rng, 9, 4));
        let e = &d * &d + rat(rng.random_range(1..=20), rng.random_range(1..=4));
        let m1 = [
            [int(1), c.clone(), d.clone()],
            [c.clone(), &c * &c, &c * &d],
            [d.clone(), &c * &d, e.clone()],
        ];
        let b2 = [
            [&c * &c, &c * &d, e.clone()],
            [&c * &c * &c, &c * &c * &d, &c * &e],
            [&c * &c * &d, &c * &e, &e * &d],
        ];
        flat_instance(&from_blocks(m1, b2), 2);
        count += 1;
    }

    // rank 2 with Y = d·1 + e·X
    for _ in 0..65 {
        let (c, d, e) = (
            small_rat(&mut rng, 9, 4),
            nonzero_rat(&mut rng, 9, 4),
            nonzero_rat(&mut rng, 9, 4),
        );
        let f = &c * &c + rat(rng.random_range(1..=20), rng.random_range(1..=4));
        let (cd, ef, cde) = (&c * &d, &e * &f, &c * &d * &e);
        let m02 = &d * &d + &e * &e * &f + &cde * int(2);
        let m1 = [
            [int(1), c.clone(), &c * &e + &d],
            [c.clone(), f.clone(), &cd + &ef],
            [&c * &e + &d, &cd + &ef, m02.clone()],
        ];
        let b21 = &c * &ef + &d * &f;
        let b12 = &c * &d * &d + &c * &e * &ef + int(2) * &d * &ef;
        let b03 = &d * &d * &d
            + &c * &e * &e * &ef
            + int(3) * &cd * &d * &e
            + int(3) * &d * &e * &ef;
        let b2 = [
            [f.clone(), &cd + &ef, m02.clone()],
            [&c * &f, b21.clone(), b12.clone()],
            [b21, b12, b03],
        ];
        flat_instance(&from_blocks(m1, b2), 2);
        count += 1;
    }
    assert_eq!(count, 200);
}

/// `W + N K` for kernel basis `N` of `M(1)` and random `K` also solves
/// `M(1) W = B(2)`, and the Schur block does not change.
#[test]
fn schur_block_is_independent_of_w() {
    let mut rng = StdRng::seed_from_u64(0xd0a5);
    for _ in 0..100 {
        // measures whose M(1) is singular: one atom, or atoms on a line
        let n_atoms = rng.random_range(1..=4);
        let (a, b) = (small_rat(&mut rng, 5, 3), small_rat(&mut rng, 5, 3));
        let vertical = rng.random_bool(0.3);
        let mut atoms = Vec::new();
        for _ in 0..n_atoms {
            let t = small_rat(&mut rng, 10, 2);
            atoms.push(if vertical { (a.clone(), t) } else { (t.clone(), &a + &b * &t) });
        }
        let weights = (0..atoms.len()).map(|_| rat(rng.random_range(1..=40), 4)).collect();
        let m = AtomicMeasure::new(atoms, weights).unwrap();
        let s = MomentSequence3::from_measure(&m).unwrap();

        let m1 = build_m1(&s);
        let kernel = null_space(m1.matrix().as_matrix());
        assert!(!kernel.is_empty());
        let w1 = solve_sym(m1.matrix(), &build_b2(&s)).unwrap();
        let mut w2 = w1.clone();
        for v in &kernel {
            let k: Vec<Rational> = (0..3).map(|_| small_rat(&mut rng, 7, 3)).collect();
            for i in 0..3 {
                for j in 0..3 {
                    w2[(i, j)] += &v[i] * &k[j];
                }
            }
        }
        assert_ne!(w1, w2);
        assert_eq!(&*m1.matrix().as_matrix() * &w2, build_b2(&s));
        assert_eq!(congruence(&w1, m1.matrix()), congruence(&w2, m1.matrix()));
    }
}

fn atom_strategy() -> impl Strategy<Value = (Rational, Rational)> {
    ((-20i64..=20, 1i64..=4), (-20i64..=20, 1i64..=4)).prop_filter_map("inside the box", |((p, q), (r, s))| {
        let (x, y) = (rat(p, q), rat(r, s));
        (x.abs() <= int(5) && y.abs() <= int(5)).then_some((x, y))
    })
}

fn measure_strategy() -> impl Strategy<Value = AtomicMeasure<Rational>> {
    prop::collection::vec((atom_strategy(), 1i64..=40), 1..=4).prop_filter_map("distinct atoms", |raw| {
        let mut atoms: Vec<(Rational, Rational)> = Vec::new();
        let mut weights = Vec::new();
        for (a, w) in raw {
            if atoms.contains(&a) {
                return None;
            }
            atoms.push(a);
            weights.push(rat(w, 4));
        }
        AtomicMeasure::new(atoms, weights).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn round_trip_and_conservation(m in measure_strategy()) {
        let s = MomentSequence3::from_measure(&m).unwrap();
        let out = solve(&s, 1e-9).unwrap();
        let sol = match out {
            SolveOutcome::Measure(sol) => sol,
            other => panic!("{other:?}"),
        };
        let report = verify_measure(&s, &sol.measure, 1e-8);
        prop_assert!(report.pass, "{report:?}");

        let cert = &sol.certificate;
        prop_assert_eq!(cert.rank_m2, cert.classification.rank_m1 + cert.rank_delta);
        prop_assert_eq!(rank(cert.m3.matrix()), cert.rank_m2);
        let expected_atoms = match cert.classification.tag {
            ClassTag::FlatEqual => cert.classification.rank_m1,
            _ => 4,
        };
        prop_assert_eq!(sol.measure.len(), expected_atoms);

        let w = sol.measure.weights();
        let at = sol.measure.atoms();
        let rel = |got: f64, want: &Rational| (got - to_f64(want)).abs() / (1.0 + to_f64(want).abs());
        prop_assert!(rel(w.iter().sum(), s.get(0, 0)) <= 1e-9);
        prop_assert!(rel(w.iter().zip(at).map(|(w, a)| w * a.0).sum(), s.get(1, 0)) <= 1e-9);
        prop_assert!(rel(w.iter().zip(at).map(|(w, a)| w * a.1).sum(), s.get(0, 1)) <= 1e-9);
    }

    #[test]
    fn psd_agrees_with_eigenvalues(entries in prop::collection::vec(-6i64..=6, 10), scale in 0i64..=3) {
        // Gram matrices G Gᵀ shifted by -scale·I straddle the boundary.
        let g = Matrix::from_fn(4, 4, |i, j| if j <= i { int(entries[i * (i + 1) / 2 + j]) } else { int(0) });
        let mut a = &g * &g.transpose();
        for i in 0..4 {
            a[(i, i)] -= int(scale);
        }
        let rows = a.to_f64_rows();
        let f = DMatrix::from_fn(4, 4, |i, j| rows[i][j]);
        let min = f.symmetric_eigenvalues().min();
        let exact = is_psd(&SymMatrix::new(a).unwrap());
        if min > 1e-9 {
            prop_assert!(exact);
        } else if min < -1e-9 {
            prop_assert!(!exact);
        }
    }

    #[test]
    fn resultant_matches_float_sylvester(
        p in prop::collection::vec(-5i64..=5, 6),
        q in prop::collection::vec(-5i64..=5, 6),
        x in -3.0f64..3.0,
    ) {
        let mons = Monomial::up_to(2);
        let pp = Poly2::from_terms(mons.iter().zip(&p).map(|(&m, &c)| (m, int(c))));
        let qq = Poly2::from_terms(mons.iter().zip(&q).map(|(&m, &c)| (m, int(c))));
        prop_assume!(pp.degree_in_y() == Some(2) && qq.degree_in_y() == Some(2));
        let r = match resultant_y(&pp, &qq) {
            Ok(r) => r.eval_f64(x),
            Err(_) => 0.0,
        };
        let cy = |poly: &Poly2| -> Vec<f64> {
            poly.coeffs_in_y().iter().rev().map(|c| c.eval_f64(x)).collect()
        };
        let (a, b) = (cy(&pp), cy(&qq));
        let syl = DMatrix::from_row_slice(4, 4, &[
            a[0], a[1], a[2], 0.0,
            0.0, a[0], a[1], a[2],
            b[0], b[1], b[2], 0.0,
            0.0, b[0], b[1], b[2],
        ]);
        let det = syl.determinant();
        let scale = syl.iter().map(|v| v.abs()).fold(1.0, f64::max).powi(4);
        prop_assert!((r - det).abs() <= 1e-10 * scale.max(det.abs()), "{r} vs {det}");
    }
}
