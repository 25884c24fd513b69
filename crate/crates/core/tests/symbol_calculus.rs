mod common;

use common::*;
use proptest::prelude::*;
use psdo_core::{random, ClassicalSymbol, HomogeneousTerm, ModelManifold, C64};

fn circle(n: usize) -> ModelManifold {
    ModelManifold::circle(n).unwrap()
}

#[test]
fn abs_xi_composed_with_exponential() {
    let m = circle(16);
    let p = ClassicalSymbol::from_term(HomogeneousTerm::from_fn(m, 1, 1, |_, _| scalar(real(1.0))).unwrap());
    let q = ClassicalSymbol::from_term(HomogeneousTerm::from_fn(m, 0, 1, |x, _| scalar(C64::from_polar(1.0, x[0]))).unwrap());
    let pq = p.compose(&q, 1).unwrap();
    for point in 0..m.points() {
        let x = m.coords(point)[0];
        for dir in 0..2 {
            let s = if dir == 0 { 1.0 } else { -1.0 };
            let e = C64::from_polar(1.0, x);
            assert!((pq.terms()[0].sample(point, dir)[0] - e).norm() < 1e-13);
            assert!((pq.terms()[1].sample(point, dir)[0] - e * s).norm() < 1e-13);
        }
    }
}

#[test]
fn sign_composed_with_itself_is_one() {
    let m = circle(16);
    let sgn = ClassicalSymbol::from_term(HomogeneousTerm::from_fn(m, 0, 1, |_, w| scalar(real(w[0].signum()))).unwrap());
    let sq = sgn.compose(&sgn, 3).unwrap();
    assert_eq!(sq.terms()[0].samples(), vec![real(1.0); 32].as_slice());
    for t in &sq.terms()[1..] {
        assert_eq!(t.max_abs(), 0.0);
    }
}

#[test]
fn pointwise_algebra_examples() {
    let m = circle(16);
    let mut r = random::rng(4);
    let beta = random::idempotent(2, 1, &mut r);
    let t = HomogeneousTerm::constant(m, 0, &beta);
    let tr = t.trace();
    for v in tr.samples() {
        assert!((v - real(1.0)).norm() < 1e-12);
    }
    let p = random::classical_symbol(m, 1, 2, 2, 2, 0, &mut r).unwrap();
    let zero = p.add(&p.scale(real(-1.0))).unwrap();
    assert_eq!(zero.term_norms(), vec![0.0; 3]);
    // 2p̃ − I on the constant idempotent is a reflection.
    let c = ClassicalSymbol::from_term(t).scale(real(2.0)).sub(&ClassicalSymbol::identity(m, 2)).unwrap();
    let c0 = c.terms()[0].sample_matrix(3, 1);
    assert!((&c0 * &c0 - nalgebra::DMatrix::identity(2, 2)).camax() < 1e-12);
}

fn manifold_strategy() -> impl Strategy<Value = ModelManifold> {
    prop_oneof![Just(circle(16)), Just(ModelManifold::torus(16, 32).unwrap())]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn homogeneity(m in manifold_strategy(), seed in 0u64..1000, degree in -3i32..3, point in 0usize..16, dir in 0usize..2) {
        let t = random::band_limited_term(m, degree, 2, 2, 1, &mut random::rng(seed)).unwrap();
        let x = m.coords(point);
        let w = m.direction(dir * (m.dirs() / 2 - 1));
        let xi: Vec<f64> = w[..m.dim()].iter().map(|v| 0.8 * v + 0.1).collect();
        let base = t.evaluate(&x[..m.dim()], &xi).unwrap();
        for s in [0.5, 2.0, 7.0] {
            let scaled: Vec<f64> = xi.iter().map(|v| s * v).collect();
            let v = t.evaluate(&x[..m.dim()], &scaled).unwrap();
            let expect = &base * real(f64::powi(s, degree));
            prop_assert!((v - &expect).camax() <= 1e-13 * (1.0 + expect.camax()));
        }
    }

    #[test]
    fn composition_is_associative(m in manifold_strategy(), seed in 0u64..1000, order in 1usize..=4) {
        let mut r = random::rng(seed);
        let p = random::classical_symbol(m, 1, order, 2, 1, 1, &mut r).unwrap();
        let q = random::classical_symbol(m, 0, order, 2, 1, 1, &mut r).unwrap();
        let s = random::classical_symbol(m, -1, order, 2, 1, 1, &mut r).unwrap();
        let left = p.compose(&q, order).unwrap().compose(&s, order).unwrap();
        let right = p.compose(&q.compose(&s, order).unwrap(), order).unwrap();
        prop_assert!(symbol_distance(&left, &right) < 1e-10);
    }

    #[test]
    fn identity_is_a_two_sided_unit(m in manifold_strategy(), seed in 0u64..1000, order in 0usize..=3) {
        let p = random::classical_symbol(m, 1, order, 2, 2, 1, &mut random::rng(seed)).unwrap();
        let id = ClassicalSymbol::identity(m, 2);
        prop_assert_eq!(&id.compose(&p, order).unwrap(), &p);
        prop_assert_eq!(&p.compose(&id, order).unwrap(), &p);
    }
}
