use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fiber::{self, C64, ONE, ZERO};
use crate::jet;
use crate::manifold::ModelManifold;
use crate::spectral::{for_each_line, Spectral};

/// A matrix-valued function on the cosphere bundle, extended to `ξ ≠ 0` by
/// positive homogeneity: `f(x, ξ) = |ξ|^d f(x, ξ/|ξ|)`.
///
/// Besides the samples themselves a term may carry exact x-derivatives up to
/// `jet_order` (normalised Taylor coefficients at every grid point). Terms
/// built from closed-form data carry jets so that derivatives stay local and
/// exact; plain sampled terms have `jet_order == 0` and are differentiated
/// spectrally.
///
/// Storage is `[jet][point][direction][row][col]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousTerm {
    manifold: ModelManifold,
    degree: i32,
    fiber: usize,
    jet_order: usize,
    data: Vec<C64>,
}

impl HomogeneousTerm {
    pub fn zeros(manifold: ModelManifold, degree: i32, fiber: usize, jet_order: usize) -> Self {
        let len = jet::jet_len(manifold.dim(), jet_order)
            * manifold.points()
            * manifold.dirs()
            * fiber
            * fiber;
        Self {
            manifold,
            degree,
            fiber,
            jet_order,
            data: vec![ZERO; len],
        }
    }

    /// Samples `f(x, ω)` at every grid point and unit direction.
    pub fn from_fn<F>(manifold: ModelManifold, degree: i32, fiber: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 2], [f64; 2]) -> DMatrix<C64>,
    {
        let mut term = Self::zeros(manifold, degree, fiber, 0);
        let s = fiber * fiber;
        for p in 0..manifold.points() {
            let x = manifold.coords(p);
            for d in 0..manifold.dirs() {
                let v = f(x, manifold.direction(d));
                if v.nrows() != fiber || v.ncols() != fiber {
                    return Err(Error::ShapeMismatch(format!(
                        "sample has shape {}x{}, expected {fiber}x{fiber}",
                        v.nrows(),
                        v.ncols()
                    )));
                }
                let off = (p * manifold.dirs() + d) * s;
                term.data[off..off + s].copy_from_slice(&fiber::from_matrix(&v));
            }
        }
        term.check_finite()?;
        Ok(term)
    }

    /// The same matrix at every sample.
    pub fn constant(manifold: ModelManifold, degree: i32, value: &DMatrix<C64>) -> Self {
        let fiber = value.nrows();
        let flat = fiber::from_matrix(value);
        let mut term = Self::zeros(manifold, degree, fiber, 0);
        for chunk in term.data.chunks_mut(fiber * fiber) {
            chunk.copy_from_slice(&flat);
        }
        term
    }

    /// Assembles a term from raw storage, `[jet][point][direction][row][col]`.
    pub fn from_parts(
        manifold: ModelManifold,
        degree: i32,
        fiber: usize,
        jet_order: usize,
        data: Vec<C64>,
    ) -> Result<Self> {
        let expect = Self::zeros(manifold, degree, fiber, 0).data.len()
            * jet::jet_len(manifold.dim(), jet_order);
        if data.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "term storage has {} entries, expected {expect}",
                data.len()
            )));
        }
        let term = Self {
            manifold,
            degree,
            fiber,
            jet_order,
            data,
        };
        term.check_finite()?;
        Ok(term)
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at storage offset {pos}"
            )));
        }
        Ok(())
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn jet_order(&self) -> usize {
        self.jet_order
    }

    fn block_len(&self) -> usize {
        self.manifold.points() * self.manifold.dirs() * self.fiber * self.fiber
    }

    fn jet_count(&self) -> usize {
        jet::jet_len(self.manifold.dim(), self.jet_order)
    }

    /// Samples of the function itself (jet index 0).
    pub fn samples(&self) -> &[C64] {
        &self.data[..self.block_len()]
    }

    /// Storage of the normalised Taylor coefficient `∂^α f / α!`.
    pub fn jet_block(&self, alpha: [usize; 2]) -> Option<&[C64]> {
        if alpha[0] + alpha[1] > self.jet_order || (self.manifold.dim() == 1 && alpha[1] != 0) {
            return None;
        }
        let k = jet::jet_index(self.manifold.dim(), alpha);
        let b = self.block_len();
        Some(&self.data[k * b..(k + 1) * b])
    }

    pub(crate) fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Fiber matrix at a grid point and direction sample, as a slice.
    pub fn sample(&self, point: usize, dir: usize) -> &[C64] {
        let s = self.fiber * self.fiber;
        let off = (point * self.manifold.dirs() + dir) * s;
        &self.data[off..off + s]
    }

    pub fn sample_matrix(&self, point: usize, dir: usize) -> DMatrix<C64> {
        fiber::to_matrix(self.sample(point, dir), self.fiber)
    }

    /// Largest entry modulus over the samples.
    pub fn max_abs(&self) -> f64 {
        fiber::max_abs(self.samples())
    }

    /// Largest entry modulus over the samples and all carried jets.
    pub fn max_abs_jets(&self) -> f64 {
        fiber::max_abs(&self.data)
    }

    /// Largest entry modulus at one grid point, over all directions and jets.
    pub fn max_abs_at(&self, point: usize) -> f64 {
        let s = self.fiber * self.fiber;
        let d = self.manifold.dirs();
        let b = self.block_len();
        (0..self.jet_count())
            .map(|k| {
                let off = k * b + point * d * s;
                fiber::max_abs(&self.data[off..off + d * s])
            })
            .fold(0.0, f64::max)
    }

    /// Whether every sample and jet at `point` is exactly zero.
    pub fn vanishes_at(&self, point: usize) -> bool {
        self.max_abs_at(point) == 0.0
    }

    /// Value at an arbitrary base point and nonzero covector. Off-grid base
    /// points and (for n = 2) off-grid angles use trigonometric interpolation.
    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<C64>> {
        let dim = self.manifold.dim();
        if x.len() != dim || xi.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {dim}-dimensional x and ξ"
            )));
        }
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Domain("symbols are evaluated at ξ ≠ 0 only".into()));
        }
        let n = self.manifold.n();
        let spectral = Spectral::new(n);
        let axis_weights: Vec<Vec<C64>> = x.iter().map(|&c| spectral.interpolation_weights(c)).collect();
        let dir_weights: Vec<(usize, C64)> = match dim {
            1 => vec![(if xi[0] > 0.0 { 0 } else { 1 }, ONE)],
            _ => {
                let theta = xi[1].atan2(xi[0]).rem_euclid(2.0 * PI);
                Spectral::new(self.manifold.dirs())
                    .interpolation_weights(theta)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, w)| *w != ZERO)
                    .collect()
            }
        };
        let s = self.fiber * self.fiber;
        let mut acc = vec![ZERO; s];
        for p in 0..self.manifold.points() {
            let idx = self.manifold.axis_indices(p);
            let mut w = axis_weights[0][idx[0]];
            if dim == 2 {
                w *= axis_weights[1][idx[1]];
            }
            if w == ZERO {
                continue;
            }
            for &(d, wd) in &dir_weights {
                let v = self.sample(p, d);
                for e in 0..s {
                    acc[e] += w * wd * v[e];
                }
            }
        }
        let scale = r.powi(self.degree);
        Ok(fiber::to_matrix(&acc, self.fiber).map(|z| z * scale))
    }

    /// `∂/∂x_axis`, keeping the degree. Uses carried jets when available and
    /// Fourier differentiation of the samples otherwise.
    pub fn differentiate_x(&self, axis: usize) -> Result<Self> {
        let dim = self.manifold.dim();
        if axis >= dim {
            return Err(Error::Domain(format!("axis {axis} out of range for n = {dim}")));
        }
        if self.jet_order >= 1 {
            let order = self.jet_order - 1;
            let mut out = Self::zeros(self.manifold, self.degree, self.fiber, order);
            let b = self.block_len();
            for k in 0..jet::jet_len(dim, order) {
                let mut beta = jet::multi_index(dim, k);
                let factor = (beta[axis] + 1) as f64;
                beta[axis] += 1;
                let src = jet::jet_index(dim, beta);
                for (o, v) in out.data[k * b..(k + 1) * b]
                    .iter_mut()
                    .zip(&self.data[src * b..(src + 1) * b])
                {
                    *o = v * factor;
                }
            }
            return Ok(out);
        }
        let mut out = self.clone();
        let n = self.manifold.n();
        let inner = self.manifold.dirs() * self.fiber * self.fiber;
        let mut spectral = Spectral::new(n);
        match (dim, axis) {
            (1, _) => for_each_line(&mut out.data, 1, n, inner, |l| spectral.differentiate(l)),
            (_, 0) => for_each_line(&mut out.data, 1, n, n * inner, |l| spectral.differentiate(l)),
            _ => for_each_line(&mut out.data, n, n, inner, |l| spectral.differentiate(l)),
        }
        Ok(out)
    }

    /// `∂/∂ξ_axis`, lowering the degree by one.
    ///
    /// For n = 1, `∂_ξ(|ξ|^d c_±) = d |ξ|^{d-1} sgn(ξ) c_±`. For n = 2 with
    /// `f = |ξ|^d g(θ)`, `∂_{ξ₁} f = |ξ|^{d-1}(d cos θ g − sin θ g′)` and
    /// `∂_{ξ₂} f = |ξ|^{d-1}(d sin θ g + cos θ g′)`.
    pub fn differentiate_xi(&self, axis: usize) -> Result<Self> {
        let dim = self.manifold.dim();
        if axis >= dim {
            return Err(Error::Domain(format!("axis {axis} out of range for n = {dim}")));
        }
        let d = self.degree as f64;
        let s = self.fiber * self.fiber;
        let dirs = self.manifold.dirs();
        let mut out = Self::zeros(self.manifold, self.degree - 1, self.fiber, self.jet_order);
        if dim == 1 {
            for (chunk_idx, (o, v)) in out
                .data
                .chunks_mut(s)
                .zip(self.data.chunks(s))
                .enumerate()
            {
                let sign = if chunk_idx % 2 == 0 { d } else { -d };
                for (oe, ve) in o.iter_mut().zip(v) {
                    *oe = ve * sign;
                }
            }
            return Ok(out);
        }
        let mut gprime = self.data.clone();
        let mut spectral = Spectral::new(dirs);
        let lines = self.data.len() / (dirs * s);
        for_each_line(&mut gprime, lines, dirs, s, |l| spectral.differentiate(l));
        for (chunk_idx, ((o, g), gp)) in out
            .data
            .chunks_mut(s)
            .zip(self.data.chunks(s))
            .zip(gprime.chunks(s))
            .enumerate()
        {
            let theta = self.manifold.angle(chunk_idx % dirs);
            let (sin, cos) = theta.sin_cos();
            let (a, b) = if axis == 0 { (d * cos, -sin) } else { (d * sin, cos) };
            for e in 0..s {
                o[e] = g[e] * a + gp[e] * b;
            }
        }
        Ok(out)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.manifold != other.manifold {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.manifold, other.manifold
            )));
        }
        if self.fiber != other.fiber {
            return Err(Error::ShapeMismatch(format!(
                "fiber dimension {} vs {}",
                self.fiber, other.fiber
            )));
        }
        Ok(())
    }

    /// Drops carried derivatives above `order`.
    pub fn truncate_jets(&self, order: usize) -> Self {
        if order >= self.jet_order {
            return self.clone();
        }
        let len = jet::jet_len(self.manifold.dim(), order) * self.block_len();
        self.like(self.fiber, order, self.data[..len].to_vec())
    }

    fn like(&self, fiber: usize, jet_order: usize, data: Vec<C64>) -> Self {
        Self {
            manifold: self.manifold,
            degree: self.degree,
            fiber,
            jet_order,
            data,
        }
    }

    /// Computes jets up to `order` by Fourier differentiation of the samples;
    /// exact for band-limited data.
    pub fn with_spectral_jets(&self, order: usize) -> Self {
        let base = self.truncate_jets(0);
        let dim = self.manifold.dim();
        let mut out = Self::zeros(self.manifold, self.degree, self.fiber, order);
        let b = self.block_len();
        for k in 0..jet::jet_len(dim, order) {
            let alpha = jet::multi_index(dim, k);
            let mut t = base.clone();
            for axis in 0..dim {
                for _ in 0..alpha[axis] {
                    t = t.differentiate_x(axis).expect("axis in range");
                }
            }
            let inv = 1.0 / jet::factorial(alpha);
            for (o, v) in out.data[k * b..(k + 1) * b].iter_mut().zip(&t.data) {
                *o = v * inv;
            }
        }
        out
    }

    /// Sum of two terms of the same degree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -ONE)
    }

    fn combine(&self, other: &Self, sign: C64) -> Result<Self> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::ShapeMismatch(format!(
                "cannot add terms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let order = self.jet_order.min(other.jet_order);
        let mut out = self.truncate_jets(order);
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += sign * v;
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Pointwise matrix product `self · other`; degrees add, jets multiply by
    /// the Leibniz rule.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_to_order(other, self.jet_order.min(other.jet_order))
    }

    /// Pointwise product carrying jets only up to `order`.
    pub fn mul_to_order(&self, other: &Self, order: usize) -> Result<Self> {
        self.check_compatible(other)?;
        let order = order.min(self.jet_order).min(other.jet_order);
        let m = self.fiber;
        let s = m * m;
        let b = self.block_len();
        let samples = b / s;
        let mut out = Self::zeros(self.manifold, self.degree + other.degree, m, order);
        for (i, j, k) in jet::product_table(self.manifold.dim(), order) {
            let a = &self.data[i * b..(i + 1) * b];
            let c = &other.data[j * b..(j + 1) * b];
            if a.iter().all(|z| *z == ZERO) || c.iter().all(|z| *z == ZERO) {
                continue;
            }
            let o = &mut out.data[k * b..(k + 1) * b];
            for t in 0..samples {
                let r = t * s..(t + 1) * s;
                fiber::mul_acc(&a[r.clone()], &c[r.clone()], ONE, &mut o[r], m);
            }
        }
        Ok(out)
    }

    /// Pointwise inverse, of degree `-d`. Jets follow from
    /// `g_γ = −f₀⁻¹ Σ_{α+β=γ, α≠0} f_α g_β`.
    pub fn inverse(&self) -> Result<Self> {
        let m = self.fiber;
        let s = m * m;
        let b = self.block_len();
        let samples = b / s;
        let jets = self.jet_count();
        let table = jet::product_table(self.manifold.dim(), self.jet_order);
        let mut out = Self::zeros(self.manifold, -self.degree, m, self.jet_order);
        let mut buf = vec![ZERO; jets * s];
        for t in 0..samples {
            for k in 0..jets {
                buf[k * s..(k + 1) * s].copy_from_slice(&self.data[k * b + t * s..k * b + (t + 1) * s]);
            }
            let g = fiber::invert_jet(&buf, m, &table).ok_or_else(|| {
                Error::Singular(format!(
                    "at grid point {}, direction {}",
                    t / self.manifold.dirs(),
                    t % self.manifold.dirs()
                ))
            })?;
            for k in 0..jets {
                out.data[k * b + t * s..k * b + (t + 1) * s].copy_from_slice(&g[k * s..(k + 1) * s]);
            }
        }
        Ok(out)
    }

    /// `self − λ I` on the samples, keeping the degree tag. This is how the
    /// resolvent argument `c(x, ω) − λ` is formed on the reduced cosphere.
    pub fn shifted(&self, lambda: C64) -> Self {
        let mut out = self.clone();
        let m = self.fiber;
        for chunk in out.data[..self.block_len()].chunks_mut(m * m) {
            for i in 0..m {
                chunk[i * m + i] -= lambda;
            }
        }
        out
    }

    /// Fiber trace, a scalar term of the same degree.
    pub fn trace(&self) -> Self {
        let m = self.fiber;
        let data = self.data.chunks(m * m).map(|c| fiber::trace(c, m)).collect();
        self.like(1, self.jet_order, data)
    }

    /// Relabels the degree; used for parametrix values on the reduced sphere.
    pub(crate) fn with_degree(mut self, degree: i32) -> Self {
        self.degree = degree;
        self
    }
}
