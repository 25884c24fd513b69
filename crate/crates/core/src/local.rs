//! Pointwise kernels on matrix-valued jets.
//!
//! A local jet is `[jet][m × m]` for a single sample. Everything here is
//! allocation-free once the tables are built, which is what makes the
//! per-sample parametrix and refinement loops cheap.

use crate::fiber::{self, C64, ONE, ZERO};
use crate::jet;

/// Product and shift tables for jets in `dim` variables up to `order`.
#[derive(Debug, Clone)]
pub(crate) struct JetAlgebra {
    dim: usize,
    /// For each output index `k`, the pairs `(i, j)` with `α_i + α_j = α_k`.
    products: Vec<Vec<(usize, usize)>>,
}

impl JetAlgebra {
    pub(crate) fn new(dim: usize, order: usize) -> Self {
        let len = jet::jet_len(dim, order);
        let mut products = vec![Vec::new(); len];
        for (i, j, k) in jet::product_table(dim, order) {
            products[k].push((i, j));
        }
        Self { dim, products }
    }

    pub(crate) fn len(&self, order: usize) -> usize {
        jet::jet_len(self.dim, order)
    }

    /// `out = s · a · b` truncated to `order`; `a` and `b` may carry more jets.
    pub(crate) fn mul(&self, a: &[C64], b: &[C64], s: C64, out: &mut [C64], m: usize, order: usize) {
        let sz = m * m;
        let n = self.len(order);
        out[..n * sz].fill(ZERO);
        self.mul_acc(a, b, s, out, m, order);
    }

    /// `out += s · a · b` truncated to `order`.
    pub(crate) fn mul_acc(&self, a: &[C64], b: &[C64], s: C64, out: &mut [C64], m: usize, order: usize) {
        let sz = m * m;
        for k in 0..self.len(order) {
            let o = &mut out[k * sz..(k + 1) * sz];
            for &(i, j) in &self.products[k] {
                fiber::mul_acc(&a[i * sz..(i + 1) * sz], &b[j * sz..(j + 1) * sz], s, o, m);
            }
        }
    }

    /// Inverse to `order`; `work` needs `m²` entries. Returns false if the
    /// value is singular.
    pub(crate) fn invert(&self, f: &[C64], out: &mut [C64], work: &mut [C64], m: usize, order: usize) -> bool {
        let sz = m * m;
        if !fiber::invert_into(&f[..sz], m, &mut out[..sz]) {
            return false;
        }
        for k in 1..self.len(order) {
            work[..sz].fill(ZERO);
            for &(i, j) in &self.products[k] {
                if i != 0 {
                    fiber::mul_acc(&f[i * sz..(i + 1) * sz], &out[j * sz..(j + 1) * sz], ONE, work, m);
                }
            }
            let (done, rest) = out.split_at_mut(k * sz);
            rest[..sz].fill(ZERO);
            fiber::mul_acc(&done[..sz], &work[..sz], -ONE, &mut rest[..sz], m);
        }
        true
    }

    /// `∂_x^α` of a jet, as a jet of order `order` (needs `order + |α|` input jets).
    pub(crate) fn shift(&self, f: &[C64], alpha: [usize; 2], out: &mut [C64], m: usize, order: usize) {
        let sz = m * m;
        for k in 0..self.len(order) {
            let beta = jet::multi_index(self.dim, k);
            let src = jet::jet_index(self.dim, [beta[0] + alpha[0], beta[1] + alpha[1]]);
            let factor = falling(beta[0] + alpha[0], alpha[0]) * falling(beta[1] + alpha[1], alpha[1]);
            for e in 0..sz {
                out[k * sz + e] = f[src * sz + e] * factor;
            }
        }
    }
}

/// `n (n−1) ⋯ (n−k+1)`.
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}
