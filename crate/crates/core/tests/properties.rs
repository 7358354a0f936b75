mod common;

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use refinable::attractor::{is_j0_invariant, omega, omega_with, OmegaOptions};
use refinable::maskdesign::{design_minimal_mask, verify_lower_bound};
use refinable::subdivision::{subdivision_step, GridData};
use refinable::transition::operator::grid_extrema;
use refinable::transition::sum_rules_order;
use refinable::trigpoly::{face_basis, ZeroConstraint, ZeroSet};

fn tiles() -> Vec<Tile> {
    vec![dyadic(), bear(), dragon(), three_dig1(), three_dig2(), anisotropic(), square()]
}

fn two_digit_matrices() -> Vec<Vec<Vec<i64>>> {
    vec![
        vec![vec![2]],
        vec![vec![-2]],
        vec![vec![1, -2], vec![1, 0]],
        vec![vec![1, -1], vec![1, 1]],
        vec![vec![0, 2], vec![1, 0]],
        vec![vec![1, 1], vec![1, -1]],
        vec![vec![0, 1, 0], vec![0, 0, 1], vec![2, 0, 0]],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transition_matches_pointwise_definition(
        tile in 0usize..7,
        order in 0usize..3,
        coeff_seed in any::<u64>(),
        xi in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let t = &tiles()[tile];
        let mask = t.mask(order);
        let tm = transition(&t.m, &mask);
        let mut rng = ChaCha8Rng::seed_from_u64(coeff_seed);
        let p = DVector::from_fn(tm.space.len(), |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
        let xi = &xi[..t.m.dim()];
        let direct = tm.space.evaluate(&tm.apply(&p), xi);
        let oracle = transition_pointwise(&t.m, &mask, &tm.space, &p, xi);
        prop_assert!((direct - oracle).abs() <= 1e-10, "{} {}: {direct} vs {oracle}", t.name, order);
    }

    #[test]
    fn squared_polynomials_stay_nonnegative(tile in 0usize..6, seed in any::<u64>()) {
        let t = &tiles()[tile];
        let mask = t.mask(1);
        let tm = transition(&t.m, &mask);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let support = difference_closed_subset(tm.space.support(), 5, &mut rng);
        let q: Vec<f64> = support.iter().map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let p = squared(&tm.space, &support, &q);
        let tp = tm.apply(&p);
        let (lo, hi) = grid_extrema(&tm.space, &tp, 48);
        prop_assert!(lo >= -1e-12 * hi.abs().max(1.0), "{}: min {lo}", t.name);
    }

    #[test]
    fn sum_rule_faces_are_invariant(tile in 0usize..6, order in 0usize..4) {
        let t = &tiles()[tile];
        let mask = t.mask(order);
        prop_assert_eq!(sum_rules_order(&mask, &t.m), order as i64);
        let tm = transition(&t.m, &mask);
        for k in 0..=order {
            let r = origin_face_residual(&tm, k);
            prop_assert!(r < 1e-8, "{} order {order} k {k}: {r}", t.name);
        }
    }

    #[test]
    fn omega_is_a_fixed_point(tile in 0usize..7, order in 0usize..3) {
        let t = &tiles()[tile];
        let q = t.mask(order).support();
        let om = omega(&t.m, &q).unwrap();
        prop_assert!(om.is_symmetric());
        prop_assert!(om.contains(&vec![0; t.m.dim()]));
        prop_assert!(is_j0_invariant(&t.m, &om, &q));
        // every k keeps a successor M k + q′ in Ω
        let qd = refinable::attractor::difference_set(&q);
        for k in om.points() {
            let mk = t.m.apply(k);
            let kept = qd.iter().any(|qp| {
                let s: Vec<i64> = mk.iter().zip(qp).map(|(a, b)| a + b).collect();
                om.contains(&s)
            });
            prop_assert!(kept, "{k:?}");
        }
        // a larger starting ball finds the same greatest fixed point
        let wide = omega_with(&t.m, &q, OmegaOptions { radius_factor: 2.0, ..Default::default() }).unwrap();
        prop_assert_eq!(wide, om);
    }

    #[test]
    fn cone_growth_matches_minimal_face(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, x) = random_nonnegative(&mut rng, 8, 0.5);
        let (rate, rho) = cone_growth(&a, &x, 60);
        prop_assert!((rate - rho).abs() <= 5e-2 * rho.max(1e-300) || (rho == 0.0 && rate == 0.0),
            "rate {rate} rho {rho}");
    }

    #[test]
    fn subdivision_conserves_mass(tile in 0usize..7, order in 0usize..3, seed in any::<u64>()) {
        let t = &tiles()[tile];
        let mask = t.mask(order);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = t.m.dim();
        let values: BTreeMap<Vec<i64>, f64> = (0..20)
            .map(|_| ((0..n).map(|_| rand::Rng::gen_range(&mut rng, -5..=5)).collect(), rand::Rng::gen_range(&mut rng, -1.0..1.0)))
            .collect();
        let data = GridData::new(&t.m, 0, values).unwrap();
        let next = subdivision_step(&mask, &data).unwrap();
        let abs: f64 = data.values.values().map(|v| v.abs()).sum();
        prop_assert!((next.sum() - t.m.m() as f64 * data.sum()).abs() <= 1e-8 * abs.max(1.0));
    }

    #[test]
    fn subdivision_reproduces_polynomials(
        tile in 0usize..6,
        order in 1usize..4,
        coeffs in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let t = &tiles()[tile];
        let mask = t.mask(order);
        let n = t.m.dim();
        let terms: Vec<(Vec<usize>, f64)> = refinable::trigpoly::multi_indices(n, order)
            .into_iter()
            .zip(coeffs.iter().copied().cycle())
            .collect();
        let w = 12;
        let data = GridData::new(&t.m, 0, polynomial_data(n, w, &terms)).unwrap();
        let next = subdivision_step(&mask, &data).unwrap();
        let inv = t.m.inverse_f64();
        let reach = mask.support().iter().flat_map(|k| k.iter().map(|x| x.abs())).max().unwrap_or(0) as f64;
        let interior = |a: &[i64]| {
            let x = &inv * nalgebra::DVector::from_iterator(n, a.iter().map(|&v| v as f64));
            x.iter().all(|c| c.abs() + reach + 2.0 <= w as f64)
        };
        let r = difference_residual(&next.values, &interior, order + 1);
        prop_assert!(r < 1e-8, "{} order {order}: {r}", t.name);
    }

    #[test]
    fn designed_masks_meet_the_bound(mi in 0usize..7, order in 0usize..7) {
        let m = refinable::lattice::validate_dilation(&two_digit_matrices()[mi]).unwrap();
        let mask = design_minimal_mask(&m, order, None).unwrap();
        prop_assert_eq!(mask.len(), order + 2);
        prop_assert!(sum_rules_order(&mask, &m) >= order as i64);
        prop_assert!(verify_lower_bound(&mask, &m, order).unwrap());
        prop_assert_eq!(mask.total(), refinable::transition::Coefficient::integer(2));
    }

    #[test]
    fn face_basis_satisfies_constraints(tile in 0usize..6, order in 0usize..3, k in 0usize..3) {
        let t = &tiles()[tile];
        let tm = transition(&t.m, &t.mask(order));
        let n = t.m.dim();
        let face = face_basis(&tm.space, &[ZeroConstraint::origin(n, k)]).unwrap();
        prop_assert_eq!(face.dim + face.rank, tm.space.len());
        let gram = face.basis.tr_mul(&face.basis);
        prop_assert!((gram - nalgebra::DMatrix::identity(face.dim, face.dim)).amax() < 1e-10);
        for c in 0..face.dim {
            let p = face.basis.column(c).into_owned();
            let r = moment_residual(&tm.space, &p, 2 * (k + 1));
            prop_assert!(r < 1e-9, "{} column {c}: {r}", t.name);
        }
    }
}

#[test]
fn subspace_constraint_vanishes_on_the_line() {
    let t = anisotropic();
    let tm = transition(&t.m, &t.mask(1));
    let line = ZeroConstraint::subspace(
        vec![Rational64::from_integer(0); 2],
        vec![vec![Rational64::from_integer(0), Rational64::from_integer(1)]],
        4,
    )
    .unwrap();
    let face = face_basis(&tm.space, &[ZeroConstraint::origin(2, 1), line]).unwrap();
    assert!(face.dim > 0);
    for c in 0..face.dim {
        let p = face.basis.column(c).into_owned();
        // p and its derivatives up to order 3 vanish along ξ₁ = 0: check p(h, s) = O(h⁴)
        for s in [0.0, 0.13, 0.31, 0.5, 0.77] {
            let h = 1e-2;
            let v1 = tm.space.evaluate(&p, &[h, s]).abs();
            let v2 = tm.space.evaluate(&p, &[h / 2.0, s]).abs();
            assert!(v1 < 1e-5, "{v1}");
            assert!(v2 <= v1 / 8.0 + 1e-12, "{v1} {v2}");
        }
    }
    assert!(matches!(face.constraints[1].set, ZeroSet::Subspace { .. }));
}

#[test]
fn squared_mask_oracle_is_exact_on_a_known_case() {
    // hat mask: |ĉ(ξ)|² = cos⁴(πξ); 𝒯1 = cos⁴(πξ/2) + sin⁴(πξ/2)
    let t = dyadic();
    let mask = t.mask(1);
    let tm = transition(&t.m, &mask);
    let one = {
        let mut v = DVector::zeros(tm.space.len());
        v[0] = 1.0;
        v
    };
    for xi in [0.0, 0.1, 0.25, 0.4, 0.9] {
        let c = (std::f64::consts::PI * xi / 2.0).cos();
        let s = (std::f64::consts::PI * xi / 2.0).sin();
        let expect = c.powi(4) + s.powi(4);
        assert!((tm.space.evaluate(&tm.apply(&one), &[xi]) - expect).abs() < 1e-14);
        assert!((transition_pointwise(&t.m, &mask, &tm.space, &one, &[xi]) - expect).abs() < 1e-14);
    }
}
