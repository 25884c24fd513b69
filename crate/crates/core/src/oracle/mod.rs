//! Dense Fourier-matrix realizations of symbols.
//!
//! Operators act on trigonometric polynomials sampled on the base grid of the
//! manifold. With N points per axis the frequencies are `−N/2 … N/2 − 1`
//! in FFT order, so the frequency cutoff is `N_f = N/2`. Basis vectors are
//! ordered lexicographically in (frequency, fiber index), frequencies in FFT
//! order with the first axis slowest.
//!
//! Quantization is left (Kohn–Nirenberg): `Op(p) u(x) = Σ_k e^{ik·x} p(x, k) û(k)`.
//! At `k = 0` every homogeneous term contributes the average of its direction
//! samples.

pub mod dense;
mod export;
pub mod study;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{C64, ONE, ZERO};
use crate::manifold::ModelManifold;
use crate::random;
use crate::spectral::Spectral;
use crate::symbol::ClassicalSymbol;

pub use dense::SchurForm;
pub use export::{read_operator, write_operator, OPERATOR_MAGIC};

/// Dense operator on the truncated Fourier basis of a model manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator {
    manifold: ModelManifold,
    fiber: usize,
    matrix: DMatrix<C64>,
}

impl GridOperator {
    pub fn new(manifold: ModelManifold, fiber: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let size = fiber * manifold.points();
        if matrix.nrows() != size || matrix.ncols() != size {
            return Err(Error::ShapeMismatch(format!(
                "operator on {} modes with fiber {fiber} needs a {size}x{size} matrix, got {}x{}",
                manifold.points(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("operator has non-finite entries".into()));
        }
        Ok(Self { manifold, fiber, matrix })
    }

    pub fn identity(manifold: ModelManifold, fiber: usize) -> Self {
        let size = fiber * manifold.points();
        Self { manifold, fiber, matrix: DMatrix::identity(size, size) }
    }

    pub fn manifold(&self) -> ModelManifold {
        self.manifold
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    /// Frequency cutoff `N_f`.
    pub fn cutoff(&self) -> usize {
        self.manifold.n() / 2
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.manifold != other.manifold || self.fiber != other.fiber {
            return Err(Error::GridMismatch(format!(
                "operators on {:?}/fiber {} and {:?}/fiber {}",
                self.manifold, self.fiber, other.manifold, other.fiber
            )));
        }
        Ok(())
    }

    fn like(&self, matrix: DMatrix<C64>) -> Self {
        Self { manifold: self.manifold, fiber: self.fiber, matrix }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.like(&self.matrix * &other.matrix))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.like(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.like(&self.matrix - &other.matrix))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.like(&self.matrix * s)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.camax()
    }

    /// Frobenius norm, an upper bound for the operator norm.
    pub fn frobenius(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Image of the Fourier mode `e^{ik·x} ⊗ e_c`, with `k` given per axis.
    pub fn apply_mode(&self, k: [i64; 2], fiber_index: usize) -> Result<DVector<C64>> {
        let col = mode_index(self.manifold, k)? * self.fiber + fiber_index;
        Ok(self.matrix.column(col).into_owned())
    }
}

/// Position of a frequency in FFT order.
fn mode_index(manifold: ModelManifold, k: [i64; 2]) -> Result<usize> {
    let n = manifold.n() as i64;
    let axis = |v: i64| -> Result<usize> {
        if v < -n / 2 || v >= n / 2 {
            return Err(Error::Domain(format!("frequency {v} is outside −{} … {}", n / 2, n / 2 - 1)));
        }
        Ok(v.rem_euclid(n) as usize)
    };
    Ok(match manifold.dim() {
        1 => axis(k[0])?,
        _ => manifold.point_index([axis(k[0])?, axis(k[1])?]),
    })
}

/// Signed frequency of an FFT-order position along one axis.
fn frequency(i: usize, n: usize) -> i64 {
    if 2 * i < n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Normalised `n`-dimensional DFT of grid samples: `ĉ(ν) = N^{−n} Σ_j e^{−iν·x_j} f(x_j)`.
struct GridTransform {
    manifold: ModelManifold,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    scratch: Vec<C64>,
}

impl GridTransform {
    fn new(manifold: ModelManifold) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(manifold.n());
        let scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        Self { manifold, fft, scratch }
    }

    fn forward(&mut self, data: &mut [C64]) {
        let n = self.manifold.n();
        match self.manifold.dim() {
            1 => self.fft.process_with_scratch(data, &mut self.scratch),
            _ => {
                // Rows are contiguous; columns go through a buffer.
                self.fft.process_with_scratch(data, &mut self.scratch);
                let mut col = vec![ZERO; n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = data[i * n + j];
                    }
                    self.fft.process_with_scratch(&mut col, &mut self.scratch);
                    for i in 0..n {
                        data[i * n + j] = col[i];
                    }
                }
            }
        }
        let scale = 1.0 / self.manifold.points() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Position of `l − k` in FFT order.
fn difference_index(manifold: ModelManifold, l: usize, k: usize) -> usize {
    let n = manifold.n();
    let [l0, l1] = manifold.axis_indices(l);
    let [k0, k1] = manifold.axis_indices(k);
    manifold.point_index([(l0 + n - k0) % n, (l1 + n - k1) % n])
}

/// Left quantization of a classical symbol at frequency cutoff `n_f`.
pub fn quantize(p: &ClassicalSymbol, n_f: usize) -> Result<GridOperator> {
    let manifold = *p.manifold();
    if 2 * n_f != manifold.n() {
        return Err(Error::GridMismatch(format!(
            "frequency cutoff {n_f} does not resolve a symbol sampled on {} points per axis; use N_f = {}",
            manifold.n(),
            manifold.n() / 2
        )));
    }
    let m = p.fiber();
    let s = m * m;
    let points = manifold.points();
    let dirs = manifold.dirs();
    let n = manifold.n();
    let size = m * points;
    let mut matrix = DMatrix::<C64>::zeros(size, size);
    let mut transform = GridTransform::new(manifold);
    let angular = (manifold.dim() == 2).then(|| Spectral::new(dirs));
    // Symbol values p(x_j, k) for one k, one contiguous line per fiber entry.
    let mut lines = vec![ZERO; s * points];
    let mut dir_weights = vec![ZERO; dirs];
    for k in 0..points {
        let [k0, k1] = manifold.axis_indices(k);
        let kv = [frequency(k0, n) as f64, if manifold.dim() == 2 { frequency(k1, n) as f64 } else { 0.0 }];
        let radius = kv[0].hypot(kv[1]);
        dir_weights.fill(ZERO);
        if radius == 0.0 {
            dir_weights.fill(C64::new(1.0 / dirs as f64, 0.0));
        } else {
            match &angular {
                None => dir_weights[if kv[0] > 0.0 { 0 } else { 1 }] = ONE,
                Some(sp) => {
                    let theta = kv[1].atan2(kv[0]).rem_euclid(2.0 * PI);
                    dir_weights.copy_from_slice(&sp.interpolation_weights(theta));
                }
            }
        }
        lines.fill(ZERO);
        for term in p.terms() {
            let factor = if radius == 0.0 { 1.0 } else { radius.powi(term.degree()) };
            let samples = term.samples();
            for j in 0..points {
                for (d, w) in dir_weights.iter().enumerate() {
                    if *w == ZERO {
                        continue;
                    }
                    let base = (j * dirs + d) * s;
                    let wf = w * factor;
                    for e in 0..s {
                        lines[e * points + j] += wf * samples[base + e];
                    }
                }
            }
        }
        for e in 0..s {
            let line = &mut lines[e * points..(e + 1) * points];
            transform.forward(line);
        }
        for l in 0..points {
            let nu = difference_index(manifold, l, k);
            for r in 0..m {
                for c in 0..m {
                    matrix[(l * m + r, k * m + c)] = lines[(r * m + c) * points + nu];
                }
            }
        }
    }
    GridOperator::new(manifold, m, matrix)
}

/// How the projection of `sectorial_projection_matrix` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProjectionMethod {
    /// Reordered Schur form and a triangular Sylvester solve.
    EigenSplit,
    /// Gauss–Legendre quadrature of `λ⁻¹ C (C − λ)⁻¹` around a rectangle
    /// that encloses the right half-plane spectrum.
    Contour,
}

/// Relative distance below which an eigenvalue counts as lying on the imaginary axis.
pub const AXIS_TOLERANCE: f64 = 1e-8;

/// The projection onto the generalized eigenspaces of `C` with positive real
/// part, along the others.
pub fn sectorial_projection_matrix(c: &GridOperator, method: ProjectionMethod) -> Result<GridOperator> {
    let matrix = sectorial_projection_dense(c.matrix(), method)?;
    Ok(c.like(matrix))
}

/// Matrix-level form of [`sectorial_projection_matrix`].
pub fn sectorial_projection_dense(c: &DMatrix<C64>, method: ProjectionMethod) -> Result<DMatrix<C64>> {
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let schur = SchurForm::new(c)?;
    let eig = schur.eigenvalues();
    let tol = AXIS_TOLERANCE * norm.max(f64::MIN_POSITIVE);
    if let Some((i, z)) = eig.iter().enumerate().find(|(_, z)| z.re.abs() <= tol) {
        return Err(Error::SpectralGap {
            location: format!("eigenvalue {i} = {z:.6e}"),
            detail: format!("|Re λ| ≤ {tol:.3e} (1e-8 · ‖C‖_F); the imaginary axis is not a spectral cut"),
        });
    }
    match method {
        ProjectionMethod::EigenSplit => schur.split_projection(|z| z.re > 0.0),
        ProjectionMethod::Contour => {
            let right: Vec<&C64> = eig.iter().filter(|z| z.re > 0.0).collect();
            if right.is_empty() {
                return Ok(DMatrix::zeros(c.nrows(), c.ncols()));
            }
            let gap = right.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let re = (0.5 * gap, 1.5 * radius + 1.0);
            let im = (-(radius + 1.0), radius + 1.0);
            let nodes = dense::rectangle_nodes(re, im, &eig)?;
            let sum = schur.resolvent_quadrature(&nodes, |l| ONE / l)?;
            Ok(sum * C64::new(0.0, 1.0 / (2.0 * PI)))
        }
    }
}

/// Default node count of the matrix Riesz refinement.
pub const REFINEMENT_NODES: usize = 128;

/// Minimal distance from the spectrum to the refinement circle `|z − 1| = 1/2`.
pub const REFINEMENT_GAP: f64 = 0.05;

/// Riesz projection `(1/2πi) ∮_{|z−1|=1/2} (z − A)⁻¹ dz`, turning a nearly
/// idempotent operator into an idempotent one.
pub fn riesz_refine(a: &GridOperator, nodes: usize) -> Result<GridOperator> {
    if nodes < 32 || !nodes.is_power_of_two() {
        return Err(Error::InvalidInput(format!("refinement needs a power of two ≥ 32 nodes, got {nodes}")));
    }
    let schur = SchurForm::new(a.matrix())?;
    let center = ONE;
    let radius = 0.5;
    if let Some(z) = schur
        .eigenvalues()
        .into_iter()
        .find(|z| ((z - center).norm() - radius).abs() < REFINEMENT_GAP)
    {
        return Err(Error::SpectralGap {
            location: format!("eigenvalue {z:.6e}"),
            detail: format!("within {REFINEMENT_GAP} of the refinement circle |z − 1| = 1/2"),
        });
    }
    let circle = dense::circle_nodes(center, radius, nodes);
    // (z − A)⁻¹ = −(A − z)⁻¹.
    let sum = schur.resolvent_quadrature(&circle, |_| ZERO)?;
    Ok(a.like(sum * C64::new(0.0, 1.0 / (2.0 * PI))))
}

/// Restriction to X followed by extension by zero, `e⁺ r⁺`.
#[derive(Debug, Clone)]
pub struct TruncationMask {
    manifold: ModelManifold,
    fiber: usize,
    inside: Vec<bool>,
    matrix: DMatrix<C64>,
}

impl TruncationMask {
    /// Keeps the grid points of X, boundary points included.
    pub fn new(manifold: ModelManifold, fiber: usize) -> Self {
        let inside: Vec<bool> = (0..manifold.points()).map(|p| manifold.in_x(p)).collect();
        Self::from_points(manifold, fiber, inside)
    }

    fn from_points(manifold: ModelManifold, fiber: usize, inside: Vec<bool>) -> Self {
        let points = manifold.points();
        // In the frequency basis the mask is the convolution by the DFT of the indicator.
        let mut ind: Vec<C64> = inside.iter().map(|&b| if b { ONE } else { ZERO }).collect();
        GridTransform::new(manifold).forward(&mut ind);
        let size = fiber * points;
        let mut matrix = DMatrix::<C64>::zeros(size, size);
        for l in 0..points {
            for k in 0..points {
                let v = ind[difference_index(manifold, l, k)];
                for c in 0..fiber {
                    matrix[(l * fiber + c, k * fiber + c)] = v;
                }
            }
        }
        Self { manifold, fiber, inside, matrix }
    }

    /// Grid points kept by the mask.
    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    /// The mask in the frequency basis, `F* D F` with `D` the spatial 0/1 diagonal.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn as_operator(&self) -> GridOperator {
        GridOperator { manifold: self.manifold, fiber: self.fiber, matrix: self.matrix.clone() }
    }

    fn check(&self, a: &GridOperator) -> Result<()> {
        if a.manifold != self.manifold || a.fiber != self.fiber {
            return Err(Error::GridMismatch("mask and operator live on different grids".into()));
        }
        Ok(())
    }
}

/// `A₊ = e⁺ r⁺ A e⁺ r⁺`.
pub fn truncate(a: &GridOperator, mask: &TruncationMask) -> Result<GridOperator> {
    mask.check(a)?;
    Ok(a.like(&mask.matrix * &a.matrix * &mask.matrix))
}

/// The leftover term `L(P, Q) = (PQ)₊ − P₊ Q₊`.
pub fn leftover(p: &GridOperator, q: &GridOperator, mask: &TruncationMask) -> Result<GridOperator> {
    let pq = truncate(&p.mul(q)?, mask)?;
    let pp = truncate(p, mask)?;
    let qp = truncate(q, mask)?;
    pq.sub(&pp.mul(&qp)?)
}

/// Iteration cap of [`compare_operator_norm`].
pub const POWER_ITERATIONS: usize = 200;

/// Spectral norm estimate of `A − B` by power iteration on `(A − B)*(A − B)`.
pub fn compare_operator_norm(a: &GridOperator, b: &GridOperator) -> Result<f64> {
    let d = a.sub(b)?;
    Ok(spectral_norm(d.matrix()))
}

/// `‖A − B‖` compressed to the modes whose largest frequency component lies
/// in `lo ..= hi` in absolute value.
pub fn compare_in_band(a: &GridOperator, b: &GridOperator, lo: i64, hi: i64) -> Result<f64> {
    let d = a.sub(b)?;
    let m = d.manifold;
    let n = m.n();
    let keep: Vec<usize> = (0..d.size())
        .filter(|&i| {
            let [p, q] = m.axis_indices(i / d.fiber);
            let k = match m.dim() {
                1 => frequency(p, n).abs(),
                _ => frequency(p, n).abs().max(frequency(q, n).abs()),
            };
            (lo..=hi).contains(&k)
        })
        .collect();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |r, c| d.matrix[(keep[r], keep[c])]);
    Ok(spectral_norm(&sub))
}

/// Power-iteration estimate of `‖A‖₂`; stops after 200 steps or when the
/// estimate stagnates to 1e-12.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut r = random::rng(0x5eed);
    let mut v = DVector::from_fn(n, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    v /= C64::new(v.norm(), 0.0);
    let adj = a.adjoint();
    let mut estimate = 0.0f64;
    for _ in 0..POWER_ITERATIONS {
        let w = &adj * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = w / C64::new(norm, 0.0);
        let done = (next - estimate).abs() <= 1e-12 * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests;
