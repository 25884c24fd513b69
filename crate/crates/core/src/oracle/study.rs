//! Cross-checks between the symbol pipeline and its matrix realizations.

use serde::Serialize;

use super::{
    compare_in_band, compare_operator_norm, leftover, quantize, riesz_refine, sectorial_projection_matrix, spectral_norm, truncate,
    GridOperator, ProjectionMethod, TruncationMask,
};
use crate::error::Result;
use crate::projection::{auxiliary_symbol, IdempotentSymbolField};
use crate::symbol::ClassicalSymbol;

/// Slack allowed between consecutive orders in [`OrderAgreement::monotone`].
pub const MONOTONE_SLACK: f64 = 1.5;

/// Distance between quantized truncated projection symbols and the matrix
/// projection of the quantized auxiliary symbol.
#[derive(Debug, Clone, Serialize)]
pub struct OrderAgreement {
    /// `(J, ‖Op(π^{(J)}) − Π‖)`.
    pub errors: Vec<(usize, f64)>,
    /// The same distances compressed to [`mid_band`] frequencies, away from
    /// both the lowest modes and the Nyquist edge.
    pub mid_band: Vec<(usize, f64)>,
    /// `‖Π_eigen − Π_contour‖`.
    pub method_gap: f64,
    /// `‖Π² − Π‖` of the eigen-split projection.
    pub idempotency: f64,
    /// `‖ΠC − CΠ‖ / ‖C‖_F`.
    pub commutator: f64,
}

impl OrderAgreement {
    /// Whether each error is at most `MONOTONE_SLACK` times the previous one.
    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1].1 <= MONOTONE_SLACK * w[0].1)
    }
}

/// Frequencies `N/8 ..= 5N/16`, the window reported in
/// [`OrderAgreement::mid_band`].
pub fn mid_band(n: usize) -> (i64, i64) {
    ((n / 8) as i64, (5 * n / 16) as i64)
}

/// Compares `Op(π^{(J)})` for `J = 0 … π.order()` with the sectorial
/// projection of `Op(c)`.
pub fn order_agreement(field: &IdempotentSymbolField, pi: &ClassicalSymbol) -> Result<OrderAgreement> {
    let n_f = field.manifold().n() / 2;
    let c = quantize(&auxiliary_symbol(field), n_f)?;
    let exact = sectorial_projection_matrix(&c, ProjectionMethod::EigenSplit)?;
    let contour = sectorial_projection_matrix(&c, ProjectionMethod::Contour)?;
    let method_gap = compare_operator_norm(&exact, &contour)?;
    let square = exact.mul(&exact)?;
    let idempotency = compare_operator_norm(&square, &exact)?;
    let commutator = compare_operator_norm(&exact.mul(&c)?, &c.mul(&exact)?)? / c.frobenius();
    let (lo, hi) = mid_band(field.manifold().n());
    let mut errors = Vec::new();
    let mut band = Vec::new();
    for j in 0..=pi.order() {
        let q = quantize(&pi.truncated(j), n_f)?;
        errors.push((j, compare_operator_norm(&q, &exact)?));
        band.push((j, compare_in_band(&q, &exact, lo, hi)?));
    }
    Ok(OrderAgreement {
        errors,
        mid_band: band,
        method_gap,
        idempotency,
        commutator,
    })
}

/// Truncation behaviour of the idempotent realization of a projection symbol.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    /// `‖Π² − Π‖` of the realization.
    pub idempotency: f64,
    /// `‖Π₊‖`.
    pub truncated_norm: f64,
    /// `‖(Π₊)² − Π₊‖`.
    pub truncated_defect: f64,
    /// `1e-6 · (1 + ‖Π₊‖²)`.
    pub bound: f64,
    /// `‖L(Π, Π)‖`.
    pub leftover: f64,
}

impl TruncationReport {
    pub fn passes(&self) -> bool {
        self.truncated_defect <= self.bound
    }
}

/// Idempotent realization of a projection symbol: the Riesz refinement of
/// its quantization around the eigenvalue 1.
pub fn realize_projection(pi: &ClassicalSymbol, nodes: usize) -> Result<GridOperator> {
    let q = quantize(pi, pi.manifold().n() / 2)?;
    riesz_refine(&q, nodes)
}

pub fn truncation_report(pi: &ClassicalSymbol, nodes: usize) -> Result<TruncationReport> {
    let p = realize_projection(pi, nodes)?;
    let mask = TruncationMask::new(*pi.manifold(), pi.fiber());
    let pp = truncate(&p, &mask)?;
    let truncated_norm = spectral_norm(pp.matrix());
    let truncated_defect = compare_operator_norm(&pp.mul(&pp)?, &pp)?;
    let idempotency = compare_operator_norm(&p.mul(&p)?, &p)?;
    let leftover = spectral_norm(leftover(&p, &p, &mask)?.matrix());
    Ok(TruncationReport {
        idempotency,
        truncated_norm,
        truncated_defect,
        bound: 1e-6 * (1.0 + truncated_norm * truncated_norm),
        leftover,
    })
}
