use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fiber::C64;

/// Counterclockwise circle sampled by the trapezoid rule.
///
/// Weights are chosen so that `Σ_k w_k f(λ_k) ≈ (i/2π) ∮ f(λ) dλ`; with this
/// prefactor the resolvent `(d − λ)⁻¹` of a positive eigenvalue integrates to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    center: f64,
    radius: f64,
    nodes: usize,
}

impl Contour {
    /// The contour around `+1` on the reduced cosphere `|ξ| = 1`. The radius
    /// must lie in `(0, 1)` so that `-1` stays outside, and the node count
    /// must be a power of two, at least 32.
    pub fn projection(radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::Domain(format!("contour radius must lie in (0, 1), got {radius}")));
        }
        if nodes < 32 || !nodes.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "contour node count must be a power of two >= 32, got {nodes}"
            )));
        }
        Ok(Self {
            center: 1.0,
            radius,
            nodes,
        })
    }

    /// A general circle; only requires a positive radius and at least one node.
    pub fn circle(center: f64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || nodes == 0 {
            return Err(Error::Domain(format!(
                "contour needs a positive radius and nodes, got r = {radius}, M = {nodes}"
            )));
        }
        Ok(Self {
            center,
            radius,
            nodes,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Same circle with twice the nodes.
    pub fn refined(&self) -> Self {
        Self {
            nodes: 2 * self.nodes,
            ..*self
        }
    }

    /// `(λ_k, w_k)` with `λ_k = c + r e^{iθ_k}` and `w_k = −r e^{iθ_k} / M`.
    pub fn nodes_and_weights(&self) -> Vec<(C64, C64)> {
        (0..self.nodes)
            .map(|k| {
                let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / self.nodes as f64);
                (self.center + self.radius * e, -self.radius * e / self.nodes as f64)
            })
            .collect()
    }
}
