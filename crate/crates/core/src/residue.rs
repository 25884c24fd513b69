//! The noncommutative residue of Green operators on the model manifolds.
//!
//! For an operator with ψdo part `P`, singular Green part `G` and boundary
//! ψdo `S`, the residue is
//!
//! ```text
//! res_X(A) = ∫_X ∫_{S*_x X} tr p_{-n}(x, ξ) đS(ξ) dx
//!          + ∫_{∂X} ∫_{S*_{x'} ∂X} [ tr (tr_n g)_{1-n}(x', ξ') + tr s_{1-n}(x', ξ') ] đS(ξ') dx'
//! ```
//!
//! with `đS = dS / (2π)^n` in the interior and `dS / (2π)^{n-1}` on the
//! boundary. Both boundary contributions enter with a plus sign.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{self, C64, ZERO};
use crate::manifold::ModelManifold;
use crate::symbol::ClassicalSymbol;

/// Integration domain of the interior term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// The manifold with boundary `X`, boundary grid points included.
    X,
    /// The closed manifold `X̃`.
    Full,
}

/// `∫_Region ∫_{S*} tr p_{-n} dS/(2π)^n dx` by trapezoidal sums. Returns zero
/// when `p` has no term of degree `-n`.
///
/// Points are visited in the same order for both regions and masked points
/// are skipped, so the two sums agree exactly whenever the density vanishes
/// off `X`.
pub fn residue_interior(p: &ClassicalSymbol, region: Region) -> C64 {
    let m = *p.manifold();
    let Some(term) = p.term_of_degree(-(m.dim() as i32)) else {
        return ZERO;
    };
    let fiber = term.fiber();
    let mut acc = ZERO;
    for point in 0..m.points() {
        if region == Region::X && !m.in_x(point) {
            continue;
        }
        for dir in 0..m.dirs() {
            acc += fiber::trace(term.sample(point, dir), fiber);
        }
    }
    acc * (m.volume_weight() * m.cosphere_weight() / m.residue_normalization())
}

/// Symbol of a boundary ψdo, one classical symbol per boundary circle
/// (`x₂ = 0` and `x₂ = π` of the cylinder).
#[derive(Debug, Clone)]
pub struct BoundarySymbol {
    circles: [ClassicalSymbol; 2],
}

impl BoundarySymbol {
    pub fn new(manifold: &ModelManifold, lower: ClassicalSymbol, upper: ClassicalSymbol) -> Result<Self> {
        let circle = manifold.boundary_circle()?;
        for s in [&lower, &upper] {
            if *s.manifold() != circle {
                return Err(Error::GridMismatch(format!(
                    "boundary symbol lives on {:?}, expected {circle:?}",
                    s.manifold()
                )));
            }
        }
        Ok(Self {
            circles: [lower, upper],
        })
    }

    pub fn circles(&self) -> &[ClassicalSymbol; 2] {
        &self.circles
    }
}

/// Boundary ψdo term: `Σ_circles ∫ Σ_{ξ'=±1} tr s_{-1}(x', ξ') dx' / 2π`.
pub fn residue_boundary_psdo(s: &BoundarySymbol, manifold: &ModelManifold) -> Result<C64> {
    if manifold.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: manifold.dim(),
            what: "boundary residue terms need a boundary cosphere (n >= 2)",
        });
    }
    let circle = manifold.boundary_circle()?;
    if *s.circles[0].manifold() != circle {
        return Err(Error::GridMismatch("boundary symbol grid does not match the manifold".into()));
    }
    let mut acc = ZERO;
    for c in &s.circles {
        if let Some(term) = c.term_of_degree(-1) {
            for point in 0..circle.points() {
                for dir in 0..2 {
                    acc += fiber::trace(term.sample(point, dir), term.fiber());
                }
            }
        }
    }
    Ok(acc * (circle.spacing() / (2.0 * PI)))
}

type Kernel = Arc<dyn Fn(f64) -> DMatrix<C64> + Send + Sync>;

/// Diagonal symbol-kernel `ξ_n ↦ g̃(x', ξ', ξ_n, ξ_n)` of a singular Green
/// operator at one boundary sample.
#[derive(Clone)]
pub struct SingularGreenSymbolSample {
    circle: usize,
    point: usize,
    codirection: i8,
    decay: f64,
    degree: i32,
    kernel: Kernel,
}

impl std::fmt::Debug for SingularGreenSymbolSample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularGreenSymbolSample")
            .field("circle", &self.circle)
            .field("point", &self.point)
            .field("codirection", &self.codirection)
            .field("decay", &self.decay)
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

fn kernel_size(k: &DMatrix<C64>) -> f64 {
    k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl SingularGreenSymbolSample {
    /// Wraps a kernel with declared decay `|k(t)| ≤ C (1 + |t|)^{-ρ}`, `ρ > 1`.
    /// The decay is spot-checked: `|k(±10³)| ≤ |k(±10²)| / 10^{ρ - 1/2}`.
    pub fn new<F>(circle: usize, point: usize, codirection: i8, decay: f64, degree: i32, kernel: F) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<C64> + Send + Sync + 'static,
    {
        if circle > 1 || codirection.abs() != 1 {
            return Err(Error::InvalidInput(
                "boundary samples need circle in {0, 1} and codirection ±1".into(),
            ));
        }
        if decay.is_nan() || decay <= 1.0 {
            return Err(Error::InvalidInput(format!("decay rate must exceed 1, got {decay}")));
        }
        let factor = 10f64.powf(decay - 0.5);
        for sign in [1.0, -1.0] {
            let near = kernel_size(&kernel(sign * 1e2));
            let far = kernel_size(&kernel(sign * 1e3));
            if !far.is_finite() || !near.is_finite() || far > near / factor {
                return Err(Error::InvalidInput(format!(
                    "kernel does not decay at the declared rate {decay}: |k({})| = {far:e}, |k({})| = {near:e}",
                    sign * 1e3,
                    sign * 1e2
                )));
            }
        }
        Ok(Self {
            circle,
            point,
            codirection,
            decay,
            degree,
            kernel: Arc::new(kernel),
        })
    }

    /// Scalar convenience constructor.
    pub fn scalar<F>(circle: usize, point: usize, codirection: i8, decay: f64, kernel: F) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Self::new(circle, point, codirection, decay, -1, move |t| {
            DMatrix::from_element(1, 1, kernel(t))
        })
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }
}

/// Result of the normal-trace quadrature.
#[derive(Debug, Clone)]
pub struct NormalTrace {
    pub value: DMatrix<C64>,
    /// Size of the last refinement step.
    pub err_estimate: f64,
    pub nodes: usize,
}

const NORMAL_TRACE_RTOL: f64 = 1e-10;
const NORMAL_TRACE_MAX_NODES: usize = 1 << 22;

/// `(1/2π) ∫_ℝ k(ξ_n) dξ_n` via `ξ_n = tan u` and the midpoint rule on
/// `(-π/2, π/2)`, doubling the node count until the relative change is below
/// `1e-10`.
pub fn normal_trace(gs: &SingularGreenSymbolSample) -> Result<NormalTrace> {
    let rule = |nodes: usize| -> (DMatrix<C64>, f64) {
        let h = PI / nodes as f64;
        let mut sum: Option<DMatrix<C64>> = None;
        let mut abs = 0.0;
        for j in 0..nodes {
            let u = -0.5 * PI + (j as f64 + 0.5) * h;
            let c = u.cos();
            let v = (gs.kernel)(u.tan()) * C64::new(h / (c * c), 0.0);
            abs += kernel_size(&v);
            sum = Some(match sum {
                None => v,
                Some(s) => s + v,
            });
        }
        (sum.expect("at least one node") / C64::new(2.0 * PI, 0.0), abs / (2.0 * PI))
    };
    let mut nodes = 16;
    let (mut prev, _) = rule(nodes);
    loop {
        nodes *= 2;
        let (next, scale) = rule(nodes);
        let change = kernel_size(&(&next - &prev));
        // Relative to the value, or to a fraction of ∫|k| when the value
        // cancels to nothing.
        let size = kernel_size(&next).max(1e-4 * scale);
        if change <= NORMAL_TRACE_RTOL * size {
            return Ok(NormalTrace {
                value: next,
                err_estimate: change,
                nodes,
            });
        }
        if nodes >= NORMAL_TRACE_MAX_NODES {
            return Err(Error::Quadrature(format!(
                "normal trace did not settle after {nodes} nodes (last change {change:e})"
            )));
        }
        prev = next;
    }
}

/// Normalisation constants used by a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub interior: f64,
    pub boundary: f64,
}

/// The assembled residue of a Green operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidueReport {
    pub interior: C64,
    pub boundary_green: C64,
    pub boundary_psdo: C64,
    pub total: C64,
    pub err_estimate: f64,
    pub normalization: Normalization,
}

/// Full residue. Any slot may be empty; for n = 1 the boundary slots must be.
pub fn residue_green(
    manifold: &ModelManifold,
    p: Option<&ClassicalSymbol>,
    g: &[SingularGreenSymbolSample],
    s: Option<&BoundarySymbol>,
) -> Result<ResidueReport> {
    let dim = manifold.dim();
    if dim == 1 && (!g.is_empty() || s.is_some()) {
        return Err(Error::UnsupportedDimension {
            dim,
            what: "boundary residue terms need a boundary cosphere (n >= 2)",
        });
    }
    let interior = match p {
        Some(p) => {
            if p.manifold() != manifold {
                return Err(Error::GridMismatch("interior symbol lives on another grid".into()));
            }
            residue_interior(p, Region::X)
        }
        None => ZERO,
    };
    let mut boundary_green = ZERO;
    let mut err_estimate = 0.0;
    if !g.is_empty() {
        let circle = manifold.boundary_circle()?;
        let mut seen = std::collections::HashSet::new();
        for sample in g {
            if sample.point >= circle.points() {
                return Err(Error::InvalidInput(format!(
                    "boundary point {} out of range",
                    sample.point
                )));
            }
            if sample.degree != 1 - dim as i32 {
                continue;
            }
            if !seen.insert((sample.circle, sample.point, sample.codirection)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate singular Green sample at circle {}, point {}, ξ' = {}",
                    sample.circle, sample.point, sample.codirection
                )));
            }
            let nt = normal_trace(sample)?;
            boundary_green += nt.value.trace();
            err_estimate += nt.err_estimate;
        }
        let w = circle.spacing() / (2.0 * PI);
        boundary_green *= w;
        err_estimate *= w;
    }
    let boundary_psdo = match s {
        Some(s) => residue_boundary_psdo(s, manifold)?,
        None => ZERO,
    };
    Ok(ResidueReport {
        interior,
        boundary_green,
        boundary_psdo,
        total: interior + boundary_green + boundary_psdo,
        err_estimate,
        normalization: Normalization {
            interior: manifold.residue_normalization(),
            boundary: (2.0 * PI).powi(dim as i32 - 1),
        },
    })
}

/// Interior residue of `p#q − q#p` over the closed manifold.
///
/// The degree `-n` component of the commutator is complete only when
/// `J ≥ m_p + m_q + n`; smaller orders are refused.
pub fn residue_commutator(p: &ClassicalSymbol, q: &ClassicalSymbol, order: usize) -> Result<C64> {
    let dim = p.manifold().dim() as i32;
    let need = (p.leading_degree() + q.leading_degree() + dim).max(0) as usize;
    if order < need {
        return Err(Error::InsufficientOrder { have: order, need });
    }
    let pq = p.compose(q, order)?;
    let qp = q.compose(p, order)?;
    Ok(residue_interior(&pq.sub(&qp)?, Region::Full))
}
