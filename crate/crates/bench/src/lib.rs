//! Fixtures shared by the benchmarks.

use nalgebra::{DMatrix, DVector};
use psdo_core::projection::{build_projection, make_idempotent_field, Contour, Cutoff, IdempotentSymbolField};
use psdo_core::{random, ClassicalSymbol, ModelManifold, C64};

pub fn rank_one() -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]))
}

/// Margin field with a seeded perturbation of size `eps`.
pub fn field(m: ModelManifold, eps: f64, order: usize, seed: u64) -> IdempotentSymbolField {
    let v = random::perturbation(m, 2, eps, 2, 1, &mut random::rng(seed)).expect("resolved bandwidth");
    make_idempotent_field(&rank_one(), &v, &Cutoff::with_margin(&m, 2.0).expect("grid fits"), order).expect("gap holds")
}

pub fn projection(f: &IdempotentSymbolField, order: usize) -> ClassicalSymbol {
    build_projection(f, order, &Contour::projection(0.5, 32).expect("valid contour")).expect("projection builds")
}

/// A pair of band-limited symbols of degrees 1 and 0.
pub fn pair(m: ModelManifold, order: usize, seed: u64) -> (ClassicalSymbol, ClassicalSymbol) {
    let mut r = random::rng(seed);
    let p = random::classical_symbol(m, 1, order, 2, 2, 1, &mut r).expect("resolved bandwidth");
    let q = random::classical_symbol(m, 0, order, 2, 2, 1, &mut r).expect("resolved bandwidth");
    (p, q)
}
