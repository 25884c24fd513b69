use super::*;
use crate::projection::{self, build_projection, make_idempotent_field, Contour, Cutoff, IdempotentSymbolField};
use crate::symbol::HomogeneousTerm;
use nalgebra::DVector;

fn circle(n: usize) -> ModelManifold {
    ModelManifold::circle(n).unwrap()
}

fn scalar(v: C64) -> DMatrix<C64> {
    DMatrix::from_element(1, 1, v)
}

fn diag(values: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
}

fn operator(values: &[f64]) -> GridOperator {
    // A diagonal operator on the 8-point circle with the given leading entries.
    let m = circle(8);
    let mut d = vec![1.0; 8];
    d[..values.len()].copy_from_slice(values);
    GridOperator::new(m, 1, diag(&d)).unwrap()
}

#[test]
fn identity_symbol_quantizes_to_identity() {
    let m = circle(16);
    let q = quantize(&ClassicalSymbol::identity(m, 2), 8).unwrap();
    assert!((q.matrix() - DMatrix::<C64>::identity(32, 32)).camax() < 1e-15);
}

#[test]
fn sign_symbol_is_diagonal_with_zero_average() {
    let m = circle(16);
    let sgn = HomogeneousTerm::from_fn(m, 0, 1, |_, w| scalar(C64::new(w[0].signum(), 0.0))).unwrap();
    let q = quantize(&ClassicalSymbol::from_term(sgn), 8).unwrap();
    for i in 0..16 {
        let k = frequency(i, 16);
        for j in 0..16 {
            let expect = if i == j { k.signum() as f64 } else { 0.0 };
            assert!((q.matrix()[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-14, "{i} {j}");
        }
    }
}

#[test]
fn exponential_symbol_shifts_frequency() {
    let m = circle(16);
    let e = HomogeneousTerm::from_fn(m, 0, 1, |x, _| scalar(C64::from_polar(1.0, x[0]))).unwrap();
    let q = quantize(&ClassicalSymbol::from_term(e), 8).unwrap();
    for k in -8i64..8 {
        let col = q.apply_mode([k, 0], 0).unwrap();
        let target = mode_index(m, [if k == 7 { -8 } else { k + 1 }, 0]).unwrap();
        for (i, v) in col.iter().enumerate() {
            let expect = if i == target { ONE } else { ZERO };
            assert!((v - expect).norm() < 1e-14);
        }
    }
}

#[test]
fn homogeneous_degree_scales_with_frequency() {
    let m = circle(16);
    let t = HomogeneousTerm::from_fn(m, 2, 1, |_, _| scalar(ONE)).unwrap();
    let q = quantize(&ClassicalSymbol::from_term(t), 8).unwrap();
    for i in 0..16 {
        let k = frequency(i, 16) as f64;
        let expect = if k == 0.0 { 1.0 } else { k * k };
        assert!((q.matrix()[(i, i)].re - expect).abs() < 1e-12);
    }
}

#[test]
fn torus_quantization_interpolates_in_angle() {
    let m = ModelManifold::torus(8, 16).unwrap();
    // |ξ| cos θ = ξ₁.
    let t = HomogeneousTerm::from_fn(m, 1, 1, |_, w| scalar(C64::new(w[0], 0.0))).unwrap();
    let q = quantize(&ClassicalSymbol::from_term(t), 4).unwrap();
    for i in 0..m.points() {
        let [a, _] = m.axis_indices(i);
        let k1 = frequency(a, 8) as f64;
        let [_, b] = m.axis_indices(i);
        let expect = if a == 0 && b == 0 { 0.0 } else { k1 };
        assert!((q.matrix()[(i, i)].re - expect).abs() < 1e-12, "{i}");
    }
}

#[test]
fn cutoff_must_match_grid() {
    let m = circle(16);
    assert!(quantize(&ClassicalSymbol::identity(m, 1), 4).is_err());
}

#[test]
fn sectorial_projection_of_diagonals() {
    let p = sectorial_projection_matrix(&operator(&[1.0, -1.0, 2.0, -3.0, 5.0]), ProjectionMethod::EigenSplit).unwrap();
    let q = sectorial_projection_matrix(&operator(&[1.0, -1.0, 2.0, -3.0, 5.0]), ProjectionMethod::Contour).unwrap();
    let expect = diag(&[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    assert!((p.matrix() - &expect).camax() < 1e-14);
    assert!((q.matrix() - &expect).camax() < 1e-12);
}

#[test]
fn axis_eigenvalues_are_refused() {
    let c = operator(&[1.0, 0.0]);
    for method in [ProjectionMethod::EigenSplit, ProjectionMethod::Contour] {
        assert!(matches!(sectorial_projection_matrix(&c, method), Err(Error::SpectralGap { .. })));
    }
}

#[test]
fn methods_agree_on_a_non_normal_matrix() {
    let mut r = random::rng(21);
    let n = 24;
    let s = random::idempotent(n, 10, &mut r);
    // C = (2S − I)·D with a positive diagonal D keeps a spectral gap.
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0 + i as f64, 0.0) } else { ZERO });
    let c = (s * C64::new(2.0, 0.0) - DMatrix::identity(n, n)) * d;
    let a = sectorial_projection_dense(&c, ProjectionMethod::EigenSplit).unwrap();
    let b = sectorial_projection_dense(&c, ProjectionMethod::Contour).unwrap();
    assert!((&a - &b).camax() < 1e-8);
    assert!((&a * &a - &a).camax() < 1e-8);
}

#[test]
fn constant_field_projection_is_beta() {
    let m = circle(32);
    let beta = diag(&[1.0, 0.0]);
    let field = IdempotentSymbolField::constant(m, &beta, 2).unwrap();
    let c = quantize(&projection::auxiliary_symbol(&field), 16).unwrap();
    let expect = quantize(&ClassicalSymbol::from_term(HomogeneousTerm::constant(m, 0, &beta)), 16).unwrap();
    for method in [ProjectionMethod::EigenSplit, ProjectionMethod::Contour] {
        let p = sectorial_projection_matrix(&c, method).unwrap();
        assert!(compare_operator_norm(&p, &expect).unwrap() < 1e-10, "{method:?}");
    }
}

#[test]
fn truncation_is_idempotent_and_fixes_inner_multipliers() {
    let m = circle(16);
    let mask = TruncationMask::new(m, 1);
    let id = GridOperator::identity(m, 1);
    let once = truncate(&id, &mask).unwrap();
    assert!((once.matrix() - mask.matrix()).camax() < 1e-15);
    let twice = truncate(&once, &mask).unwrap();
    assert!((twice.matrix() - once.matrix()).camax() < 1e-14);
    // Multiplication by a function supported strictly inside X.
    let f = HomogeneousTerm::from_fn(m, 0, 1, |x, _| {
        let v = if x[0] > 0.5 && x[0] < 2.5 { (x[0] - 1.5).cos() } else { 0.0 };
        scalar(C64::new(v, 0.0))
    })
    .unwrap();
    let op = quantize(&ClassicalSymbol::from_term(f), 8).unwrap();
    let t = truncate(&op, &mask).unwrap();
    assert!((t.matrix() - op.matrix()).camax() < 1e-14);
}

#[test]
fn leftover_vanishes_against_identity() {
    let m = circle(16);
    let mask = TruncationMask::new(m, 1);
    let e = HomogeneousTerm::from_fn(m, 1, 1, |x, w| scalar(C64::new(x[0].sin() * w[0], 1.0))).unwrap();
    let p = quantize(&ClassicalSymbol::from_term(e), 8).unwrap();
    let l = leftover(&p, &GridOperator::identity(m, 1), &mask).unwrap();
    assert!(l.max_abs() < 1e-12);
}

#[test]
fn operator_norm_examples() {
    let m = circle(8);
    let a = GridOperator::identity(m, 1);
    assert_eq!(compare_operator_norm(&a, &a).unwrap(), 0.0);
    let two = a.scale(C64::new(2.0, 0.0));
    assert!((compare_operator_norm(&two, &a).unwrap() - 1.0).abs() < 1e-12);
    let d = operator(&[3.0, -5.0, 0.5]);
    assert!((compare_operator_norm(&d, &GridOperator::new(m, 1, DMatrix::zeros(8, 8)).unwrap()).unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn riesz_refinement_idempotent() {
    let mut r = random::rng(8);
    let m = circle(8);
    let p = random::idempotent(8, 3, &mut r);
    let noise = DMatrix::from_fn(8, 8, |i, j| C64::new(((i * 3 + j) as f64).sin() * 1e-3, 0.0));
    let a = GridOperator::new(m, 1, &p + noise).unwrap();
    let q = riesz_refine(&a, REFINEMENT_NODES).unwrap();
    assert!((q.matrix() * q.matrix() - q.matrix()).camax() < 1e-12);
    assert!((q.trace().re - 3.0).abs() < 1e-12);
    assert!((q.matrix() - p).camax() < 1e-2);
}

#[test]
fn refinement_refuses_eigenvalues_on_the_circle() {
    let a = operator(&[0.5]);
    assert!(matches!(riesz_refine(&a, 64), Err(Error::SpectralGap { .. })));
}

#[test]
fn blob_round_trip() {
    let m = ModelManifold::torus(8, 16).unwrap();
    let t = HomogeneousTerm::from_fn(m, 1, 1, |x, w| scalar(C64::new(w[0] + x[1].cos(), w[1]))).unwrap();
    let q = quantize(&ClassicalSymbol::from_term(t), 4).unwrap();
    let mut buf = Vec::new();
    write_operator(&q, &mut buf).unwrap();
    assert_eq!(&buf[..8], OPERATOR_MAGIC);
    let back = read_operator(buf.as_slice()).unwrap();
    assert_eq!(back, q);
    buf[0] = b'X';
    assert!(read_operator(buf.as_slice()).is_err());
}

#[test]
fn margin_field_has_small_leftover() {
    let m = circle(32);
    let beta = diag(&[1.0, 0.0]);
    let v = random::perturbation(m, 2, 0.2, 2, 0, &mut random::rng(3)).unwrap();
    let field = make_idempotent_field(&beta, &v, &Cutoff::with_margin(&m, 2.0).unwrap(), 2).unwrap();
    let pi = build_projection(&field, 2, &Contour::projection(0.5, 32).unwrap()).unwrap();
    let q = quantize(&pi, 16).unwrap();
    let mask = TruncationMask::new(m, 2);
    let l = leftover(&q, &q, &mask).unwrap();
    assert!(spectral_norm(l.matrix()) < 1e-12);
}

#[test]
fn band_comparison_sees_only_its_modes() {
    // Diagonal difference 3 at k = 0 and 0.5 at k = 5.
    let m = circle(16);
    let mut d = vec![0.0; 16];
    d[0] = 3.0;
    d[5] = 0.5;
    let a = GridOperator::new(m, 1, diag(&d)).unwrap();
    let z = GridOperator::new(m, 1, DMatrix::zeros(16, 16)).unwrap();
    assert!((compare_in_band(&a, &z, 0, 8).unwrap() - 3.0).abs() < 1e-9);
    assert!((compare_in_band(&a, &z, 1, 8).unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(compare_in_band(&a, &z, 6, 8).unwrap(), 0.0);
}
