#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use psdo_core::projection::{build_projection, make_idempotent_field, Contour, Cutoff, IdempotentSymbolField};
use psdo_core::{random, ClassicalSymbol, ModelManifold, C64};

pub fn scalar(v: C64) -> DMatrix<C64> {
    DMatrix::from_element(1, 1, v)
}

pub fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

pub fn diag(values: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| real(v))))
}

/// Largest entry over all terms of `a − b`.
pub fn symbol_distance(a: &ClassicalSymbol, b: &ClassicalSymbol) -> f64 {
    a.sub(b).unwrap().term_norms().into_iter().fold(0.0, f64::max)
}

/// Rank-one field on the circle with the default margin.
pub fn circle_field(n: usize, epsilon: f64, order: usize, seed: u64) -> IdempotentSymbolField {
    let m = ModelManifold::circle(n).unwrap();
    let v = random::perturbation(m, 2, epsilon, 2, 0, &mut random::rng(seed)).unwrap();
    make_idempotent_field(&diag(&[1.0, 0.0]), &v, &Cutoff::with_margin(&m, 2.0).unwrap(), order).unwrap()
}

pub fn circle_projection(n: usize, epsilon: f64, order: usize, seed: u64) -> (IdempotentSymbolField, ClassicalSymbol) {
    let f = circle_field(n, epsilon, order, seed);
    let pi = build_projection(&f, order, &Contour::projection(0.5, 32).unwrap()).unwrap();
    (f, pi)
}
