mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use psdo_core::oracle::study::{order_agreement, truncation_report};
use psdo_core::oracle::{
    compare_operator_norm, quantize, sectorial_projection_dense, truncate, ProjectionMethod, TruncationMask,
    REFINEMENT_NODES,
};
use psdo_core::projection::{build_projection, make_counterexample_field, Contour};
use psdo_core::{random, ClassicalSymbol, GridOperator, HomogeneousTerm, ModelManifold, C64};
use rand::Rng;

/// `S·diag(λ)·S⁻¹` with eigenvalues at least `gap` away from the imaginary axis.
fn gapped_matrix(size: usize, gap: f64, seed: u64) -> (DMatrix<C64>, usize) {
    let mut r = random::rng(seed);
    let s = DMatrix::from_fn(size, size, |i, j| {
        let d = if i == j { 2.0 } else { 0.0 };
        C64::new(d + r.gen_range(-0.4..0.4), r.gen_range(-0.4..0.4))
    });
    let mut positive = 0;
    let lambda = DMatrix::from_fn(size, size, |i, j| {
        if i != j {
            return real(0.0);
        }
        let re = gap + r.gen_range(0.0..3.0);
        if i % 3 == 0 {
            C64::new(-re, r.gen_range(-2.0..2.0))
        } else {
            positive += 1;
            C64::new(re, r.gen_range(-2.0..2.0))
        }
    });
    let inv = s.clone().try_inverse().unwrap();
    (s * lambda * inv, positive)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn projection_methods_agree(size in 2usize..24, seed in 0u64..10_000) {
        let (c, rank) = gapped_matrix(size, 0.5, seed);
        let a = sectorial_projection_dense(&c, ProjectionMethod::EigenSplit).unwrap();
        let b = sectorial_projection_dense(&c, ProjectionMethod::Contour).unwrap();
        prop_assert!((&a - &b).camax() < 1e-8);
        prop_assert!((&a * &a - &a).camax() < 1e-9);
        prop_assert!((&a * &c - &c * &a).camax() < 1e-8 * c.camax());
        prop_assert!((a.trace().re - rank as f64).abs() < 1e-9);
    }

    #[test]
    fn quantization_is_linear_and_multiplicative_on_multipliers(seed in 0u64..10_000) {
        // Even symbols independent of x quantize to Fourier multipliers, which
        // compose exactly. Odd ones would not, because the zero mode averages
        // over directions.
        let m = ModelManifold::circle(16).unwrap();
        let mut r = random::rng(seed);
        let mut draw = |deg| {
            let v = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            ClassicalSymbol::from_term(HomogeneousTerm::constant(m, deg, &scalar(v)))
        };
        let (p, q) = (draw(1), draw(-1));
        let op = |s: &ClassicalSymbol| quantize(s, 8).unwrap();
        let pq = p.compose(&q, 0).unwrap();
        prop_assert!(compare_operator_norm(&op(&pq), &op(&p).mul(&op(&q)).unwrap()).unwrap() < 1e-12);
        let sum = p.add(&p.scale(real(2.0))).unwrap();
        prop_assert!(compare_operator_norm(&op(&sum), &op(&p).scale(real(3.0))).unwrap() < 1e-12);
    }

    #[test]
    fn truncation_is_a_projection_on_operators(seed in 0u64..10_000) {
        let m = ModelManifold::circle(16).unwrap();
        let mut r = random::rng(seed);
        let a = DMatrix::from_fn(32, 32, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let a = GridOperator::new(m, 2, a).unwrap();
        let mask = TruncationMask::new(m, 2);
        let once = truncate(&a, &mask).unwrap();
        let twice = truncate(&once, &mask).unwrap();
        prop_assert!((once.matrix() - twice.matrix()).camax() < 1e-13);
    }
}

#[test]
fn higher_order_symbols_track_the_matrix_projection_closely() {
    let (field, pi) = circle_projection(64, 0.2, 2, 1);
    let report = order_agreement(&field, &pi).unwrap();
    assert!(report.method_gap < 1e-8, "{report:?}");
    assert!(report.idempotency < 1e-8, "{report:?}");
    assert!(report.commutator < 1e-8, "{report:?}");
    // All orders stay close to the exact projection.
    for (_, e) in &report.errors {
        assert!(*e < 0.5, "{report:?}");
    }
}

#[test]
fn margin_beats_the_counterexample() {
    let (_, pi) = circle_projection(64, 0.2, 2, 3);
    let good = truncation_report(&pi, REFINEMENT_NODES).unwrap();
    assert!(good.passes(), "{good:?}");

    let m = *pi.manifold();
    let v = random::perturbation(m, 2, 0.2, 2, 0, &mut random::rng(3)).unwrap();
    let bad = make_counterexample_field(&diag(&[1.0, 0.0]), &v, -0.6, std::f64::consts::PI + 0.6, 2).unwrap();
    let bad_pi = build_projection(&bad, 2, &Contour::projection(0.5, 32).unwrap()).unwrap();
    let bad = truncation_report(&bad_pi, REFINEMENT_NODES).unwrap();
    assert!(bad.leftover >= 100.0 * good.leftover, "{good:?} {bad:?}");
}
