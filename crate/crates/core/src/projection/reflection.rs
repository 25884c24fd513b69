use nalgebra::DMatrix;

use super::Contour;
use crate::error::{Error, Result};
use crate::fiber::{self, C64};

/// `M/(d − λ) − (I − M)/(d + λ)`, the resolvent of the reflection `(2M − I)d`
/// for an idempotent `M`.
pub fn resolvent_reflection(m: &DMatrix<C64>, d: f64, lambda: C64) -> Result<DMatrix<C64>> {
    fiber::check_idempotent(m, 1e-10 * (1.0 + m.camax()))?;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("d must be positive, got {d}")));
    }
    let tiny = 1e-300;
    if (lambda - d).norm() < tiny || (lambda + d).norm() < tiny {
        return Err(Error::Domain(format!("λ = {lambda} is a pole of the resolvent")));
    }
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    Ok(m / (d - lambda) - (id - m) / (d + lambda))
}

/// `(i/2π) ∮_{∂B(d, r)} [(2M − I)d − λ]⁻¹ dλ` by the trapezoid rule on
/// `nodes` points, using the partial-fraction form of the resolvent. The
/// exact value is `M`.
pub fn lemma_a1_contour(m: &DMatrix<C64>, d: f64, r: f64, nodes: usize) -> Result<DMatrix<C64>> {
    if !(r > 0.0 && r < d) {
        return Err(Error::Domain(format!(
            "need 0 < r < d so the contour separates d from -d, got r = {r}, d = {d}"
        )));
    }
    let contour = Contour::circle(d, r, nodes)?;
    let mut acc = DMatrix::<C64>::zeros(m.nrows(), m.ncols());
    for (lambda, w) in contour.nodes_and_weights() {
        acc += resolvent_reflection(m, d, lambda)? * w;
    }
    Ok(acc)
}
