//! ψdo projections with prescribed idempotent principal symbol.
//!
//! Starting from an idempotent field `p̃` that equals a constant `β` near ∂X,
//! the auxiliary symbol `c₂ = (2p̃ − I)|ξ|²` has eigenvalues `±|ξ|²`. Its
//! resolvent parametrix, integrated over a small circle around `+|ξ|²`,
//! yields the full symbol of the sectorial projection of `Op(c)`.

mod contour;
mod field;
mod parametrix;
mod reflection;

pub use contour::Contour;
pub use field::{make_counterexample_field, make_idempotent_field, Cutoff, IdempotentSymbolField, MIN_MARGIN_CELLS};
pub use parametrix::ParametrixTable;
pub use reflection::{lemma_a1_contour, resolvent_reflection};

use crate::error::{Error, Result};
use crate::fiber::{self, C64, ONE};
use crate::symbol::{ClassicalSymbol, HomogeneousTerm};
use parametrix::Auxiliary;

/// `c₂ = (2p̃ − I)|ξ|²`, a single term of degree 2.
pub fn auxiliary_symbol(field: &IdempotentSymbolField) -> ClassicalSymbol {
    let c2 = field.p_tilde().scale(C64::new(2.0, 0.0)).shifted(ONE).with_degree(2);
    ClassicalSymbol::from_term(c2)
}

fn accumulate(acc: &mut [Option<HomogeneousTerm>], w: C64, q: &[HomogeneousTerm]) -> Result<()> {
    for (slot, t) in acc.iter_mut().zip(q) {
        let wt = t.scale(w);
        *slot = Some(match slot.take() {
            None => wt,
            Some(s) => s.add(&wt)?,
        });
    }
    Ok(())
}

fn finish(acc: Vec<Option<HomogeneousTerm>>) -> Result<ClassicalSymbol> {
    let terms = acc
        .into_iter()
        .enumerate()
        .map(|(j, t)| t.expect("contour has nodes").with_degree(-(j as i32)))
        .collect();
    ClassicalSymbol::new(terms)
}

/// `π_{-j} = (i/2π) ∮ q_{-2-j} dλ` by the trapezoid rule, with the j-th
/// output term carrying degree `-j`.
pub fn contour_integrate_projection(table: &ParametrixTable) -> Result<ClassicalSymbol> {
    let mut acc = vec![None; table.order() + 1];
    for (w, q) in table.weighted_terms() {
        accumulate(&mut acc, w, q)?;
    }
    finish(acc)
}

/// Full symbol `π ~ Σ_{j≤J} π_{-j}` of the projection built from `field`.
///
/// Equivalent to tabulating the parametrix and integrating it, but runs the
/// recursion sample by sample so memory does not grow with the node count.
/// Each sample sums its nodes in a fixed order, so results do not depend on
/// the thread count.
pub fn build_projection(field: &IdempotentSymbolField, order: usize, contour: &Contour) -> Result<ClassicalSymbol> {
    if field.jet_order() < order {
        return Err(Error::InsufficientOrder {
            have: field.jet_order(),
            need: order,
        });
    }
    let aux = Auxiliary::new(&auxiliary_symbol(field), order)?;
    let terms = aux.integrate(&contour.nodes_and_weights(), order, field.support())?;
    ClassicalSymbol::new(
        terms
            .into_iter()
            .enumerate()
            .map(|(j, t)| t.with_degree(-(j as i32)))
            .collect(),
    )
}

/// Checks of a projection symbol against its field.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDiagnostics {
    /// `max |π₀ − p̃|`.
    pub principal_error: f64,
    /// `max |(π#π − π)_{-j}|` for `j = 0, …, J`.
    pub idempotency: Vec<f64>,
    /// Largest entry of any `π_{-j}`, `j ≥ 1`, including carried jets, at
    /// points where the field equals β.
    pub lower_order_outside: f64,
    /// `max |π₀ − β|` at points where the field equals β.
    pub principal_outside: f64,
}

impl ProjectionDiagnostics {
    pub fn idempotency_max(&self) -> f64 {
        self.idempotency.iter().copied().fold(0.0, f64::max)
    }
}

pub fn verify_projection(field: &IdempotentSymbolField, pi: &ClassicalSymbol) -> Result<ProjectionDiagnostics> {
    let order = pi.order();
    let principal_error = {
        let d = pi.terms()[0].sub(&field.p_tilde().truncate_jets(0).with_degree(pi.leading_degree()))?;
        d.max_abs()
    };
    let sq = pi.compose(pi, order)?;
    let defect = sq.sub(pi)?;
    let idempotency = defect.terms().iter().take(order + 1).map(|t| t.max_abs()).collect();
    let m = field.fiber();
    let s = m * m;
    let beta = fiber::from_matrix(field.beta());
    let manifold = field.manifold();
    let mut lower_order_outside: f64 = 0.0;
    let mut principal_outside: f64 = 0.0;
    for p in (0..manifold.points()).filter(|&p| field.is_constant_at(p)) {
        for t in &pi.terms()[1..] {
            lower_order_outside = lower_order_outside.max(t.max_abs_at(p));
        }
        for d in 0..manifold.dirs() {
            let v = pi.terms()[0].sample(p, d);
            for e in 0..s {
                principal_outside = principal_outside.max((v[e] - beta[e]).norm());
            }
        }
    }
    Ok(ProjectionDiagnostics {
        principal_error,
        idempotency,
        lower_order_outside,
        principal_outside,
    })
}
