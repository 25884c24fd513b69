//! Spectral projections of dense complex matrices.
//!
//! Everything goes through one complex Schur form `A = Q T Q*`. The
//! eigen-split projection reorders `T` and solves a triangular Sylvester
//! equation; the quadrature projections integrate resolvents of the
//! triangular factor along a closed contour.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fiber::{C64, ONE, ZERO};
use crate::random;
use rand::Rng;

/// Points per Gauss–Legendre panel on contour sides.
const PANEL_POINTS: usize = 20;

/// Complex Schur form `A = Q T Q*` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    q: DMatrix<C64>,
    t: DMatrix<C64>,
}

impl SchurForm {
    pub fn new(a: &DMatrix<C64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "Schur form needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let (q, mut t) = schur_with_restarts(a)?;
        // Clear the rounding noise below the diagonal.
        let n = t.nrows();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = ZERO;
            }
        }
        Ok(Self { q, t })
    }

    pub fn q(&self) -> &DMatrix<C64> {
        &self.q
    }

    pub fn t(&self) -> &DMatrix<C64> {
        &self.t
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps the adjacent diagonal entries `k` and `k + 1` by a unitary
    /// rotation, keeping `Q T Q*` fixed.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (cs, sn) = givens(self.t[(k, k + 1)], t22 - t11);
        for c in k + 2..n {
            let (x, y) = rotate(self.t[(k, c)], self.t[(k + 1, c)], cs, sn);
            self.t[(k, c)] = x;
            self.t[(k + 1, c)] = y;
        }
        for r in 0..k {
            let (x, y) = rotate(self.t[(r, k)], self.t[(r, k + 1)], cs, sn.conj());
            self.t[(r, k)] = x;
            self.t[(r, k + 1)] = y;
        }
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        for r in 0..n {
            let (x, y) = rotate(self.q[(r, k)], self.q[(r, k + 1)], cs, sn.conj());
            self.q[(r, k)] = x;
            self.q[(r, k + 1)] = y;
        }
    }

    /// Moves the selected eigenvalues to the leading block; returns its size.
    pub fn reorder<F: Fn(C64) -> bool>(&mut self, select: F) -> usize {
        let n = self.t.nrows();
        let mut ks = 0;
        for j in 0..n {
            if select(self.t[(j, j)]) {
                for k in (ks..j).rev() {
                    self.swap(k);
                }
                ks += 1;
            }
        }
        ks
    }

    /// Spectral projection onto the invariant subspace of the selected
    /// eigenvalues, along the complementary one.
    pub fn split_projection<F: Fn(C64) -> bool>(mut self, select: F) -> Result<DMatrix<C64>> {
        let n = self.t.nrows();
        let k = self.reorder(&select);
        // Solve T11 Y − Y T22 = T12 column by column.
        let mut y = DMatrix::<C64>::zeros(k, n - k);
        let mut rhs = vec![ZERO; k];
        for j in 0..n - k {
            let mu = self.t[(k + j, k + j)];
            for (i, r) in rhs.iter_mut().enumerate() {
                *r = self.t[(i, k + j)];
                for l in 0..j {
                    *r += y[(i, l)] * self.t[(k + l, k + j)];
                }
            }
            for i in (0..k).rev() {
                let mut s = rhs[i];
                for l in i + 1..k {
                    s -= self.t[(i, l)] * y[(l, j)];
                }
                let d = self.t[(i, i)] - mu;
                if d.norm() == 0.0 {
                    return Err(Error::Singular(
                        "in the Sylvester solve: a selected eigenvalue coincides with an unselected one".into(),
                    ));
                }
                y[(i, j)] = s / d;
            }
        }
        let mut pt = DMatrix::<C64>::zeros(n, n);
        for i in 0..k {
            pt[(i, i)] = ONE;
            for j in 0..n - k {
                pt[(i, k + j)] = y[(i, j)];
            }
        }
        Ok(&self.q * pt * self.q.adjoint())
    }

    /// `Q S Q*` where `S = Σ w_i f(λ_i) I + Σ w_i (T − λ_i)⁻¹` over the given
    /// nodes: a contour quadrature of `f(λ) + (A − λ)⁻¹`.
    pub fn resolvent_quadrature(&self, nodes: &[(C64, C64)], scalar: impl Fn(C64) -> C64) -> Result<DMatrix<C64>> {
        let n = self.t.nrows();
        // Row-major copy of the triangle for the back substitution.
        let t: Vec<C64> = (0..n * n).map(|e| self.t[(e / n, e % n)]).collect();
        let mut acc = vec![ZERO; n * n];
        let mut x = vec![ZERO; n * n];
        let mut diag_acc = ZERO;
        for &(lambda, w) in nodes {
            triangular_resolvent(&t, n, lambda, &mut x)?;
            for (a, v) in acc.iter_mut().zip(&x) {
                *a += w * v;
            }
            diag_acc += w * scalar(lambda);
        }
        let mut s = DMatrix::from_fn(n, n, |i, j| acc[i * n + j]);
        for i in 0..n {
            s[(i, i)] += diag_acc;
        }
        Ok(&self.q * s * self.q.adjoint())
    }
}

/// Shifted QR can cycle on matrices with large blocks of exactly repeated
/// eigenvalues; a random unitary change of basis breaks the cycle.
fn schur_with_restarts(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    const ITERATIONS: usize = 20_000;
    if let Some(s) = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, ITERATIONS) {
        return Ok(s.unpack());
    }
    let n = a.nrows();
    let mut r = random::rng(0x5c4u64);
    for _ in 0..4 {
        let g = DMatrix::from_fn(n, n, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let u = g.qr().q();
        let b = u.adjoint() * a * &u;
        if let Some(s) = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, ITERATIONS) {
            let (q, t) = s.unpack();
            return Ok((u * q, t));
        }
    }
    Err(Error::Quadrature("Schur iteration did not converge".into()))
}

/// `(cs, sn)` with real `cs` such that `[cs sn; −sn̄ cs] [f; g] = [r; 0]`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    if g.norm() == 0.0 {
        return (1.0, ZERO);
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let nrm = f.norm().hypot(g.norm());
    (f.norm() / nrm, (f / f.norm()) * g.conj() / nrm)
}

fn rotate(x: C64, y: C64, c: f64, s: C64) -> (C64, C64) {
    (x * c + s * y, y * c - s.conj() * x)
}

/// Upper-triangular inverse of `T − λ` (row-major, upper part only written).
fn triangular_resolvent(t: &[C64], n: usize, lambda: C64, x: &mut [C64]) -> Result<()> {
    x.fill(ZERO);
    for j in 0..n {
        let djj = t[j * n + j] - lambda;
        if djj.norm() == 0.0 {
            return Err(Error::Singular(format!("resolvent evaluated at the eigenvalue {lambda}")));
        }
        x[j * n + j] = ONE / djj;
        for i in (0..j).rev() {
            let mut s = ZERO;
            for k in i + 1..=j {
                s += t[i * n + k] * x[k * n + j];
            }
            x[i * n + j] = -s / (t[i * n + i] - lambda);
        }
    }
    Ok(())
}

/// Trapezoid nodes and weights `dλ` on a counterclockwise circle.
pub fn circle_nodes(center: C64, radius: f64, count: usize) -> Vec<(C64, C64)> {
    (0..count)
        .map(|k| {
            let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / count as f64);
            (center + radius * e, C64::new(0.0, 2.0 * PI * radius / count as f64) * e)
        })
        .collect()
}

/// Gauss–Legendre nodes on the counterclockwise boundary of the rectangle
/// `[re.0, re.1] × [im.0, im.1]`. Panels are graded so that each one is at
/// most half as long as its distance to the nearest of `avoid`.
pub fn rectangle_nodes(re: (f64, f64), im: (f64, f64), avoid: &[C64]) -> Result<Vec<(C64, C64)>> {
    let rule = GaussLegendre::new(PANEL_POINTS).map_err(|e| Error::Quadrature(e.to_string()))?;
    let corners = [
        C64::new(re.0, im.0),
        C64::new(re.1, im.0),
        C64::new(re.1, im.1),
        C64::new(re.0, im.1),
    ];
    let dist = |z: C64| avoid.iter().map(|l| (z - l).norm()).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let length = (b - a).norm();
        let dir = (b - a) / length;
        let mut s = 0.0;
        while s < length {
            let here = a + dir * s;
            let d = dist(here);
            if d < 1e-300 {
                return Err(Error::Quadrature(format!("contour passes through the eigenvalue near {here}")));
            }
            let len = (0.5 * d).min(length - s);
            // A panel ending just short of the corner is merged into this one.
            let len = if length - s - len < 1e-3 * len { length - s } else { len };
            for &(x, w) in rule.as_node_weight_pairs() {
                let z = a + dir * (s + 0.5 * len * (x + 1.0));
                out.push((z, dir * (0.5 * len * w)));
            }
            s += len;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<C64> {
        let mut r = random::rng(seed);
        DMatrix::from_fn(n, n, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
    }

    #[test]
    fn reorder_keeps_the_factorisation() {
        let a = random_matrix(12, 4);
        let mut s = SchurForm::new(&a).unwrap();
        let k = s.reorder(|z| z.re > 0.0);
        let back = s.q() * s.t() * s.q().adjoint();
        assert!((back - &a).camax() < 1e-12);
        for i in 0..12 {
            assert_eq!(s.t()[(i, i)].re > 0.0, i < k);
            for j in 0..i {
                assert!(s.t()[(i, j)].norm() < 1e-14);
            }
        }
        let unitary = s.q().adjoint() * s.q() - DMatrix::<C64>::identity(12, 12);
        assert!(unitary.camax() < 1e-13);
    }

    #[test]
    fn split_projection_is_spectral() {
        let a = random_matrix(10, 9);
        let p = SchurForm::new(&a).unwrap().split_projection(|z| z.re > 0.0).unwrap();
        assert!((&p * &p - &p).camax() < 1e-10);
        assert!((&p * &a - &a * &p).camax() < 1e-10);
        let count = SchurForm::new(&a).unwrap().eigenvalues().iter().filter(|z| z.re > 0.0).count();
        assert!((p.trace().re - count as f64).abs() < 1e-10);
    }

    #[test]
    fn circle_quadrature_matches_split() {
        let a = random_matrix(8, 2);
        let s = SchurForm::new(&a).unwrap();
        let eig = s.eigenvalues();
        // A circle around the largest eigenvalue only.
        let top = *eig.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
        let gap = eig.iter().filter(|z| **z != top).map(|z| (z - top).norm()).fold(f64::INFINITY, f64::min);
        let nodes = circle_nodes(top, gap / 2.0, 256);
        let q = s.resolvent_quadrature(&nodes, |_| ZERO).unwrap() * C64::new(0.0, 1.0 / (2.0 * PI));
        let split = s.split_projection(|z| z == top).unwrap();
        assert!((q - split).camax() < 1e-9);
    }

    #[test]
    fn rectangle_encloses_and_integrates() {
        // ∮ dλ/(λ − 2) over a box around 2 is 2πi.
        let nodes = rectangle_nodes((1.0, 5.0), (-3.0, 3.0), &[C64::new(2.0, 0.0)]).unwrap();
        let v: C64 = nodes.iter().map(|(z, w)| w / (z - 2.0)).sum();
        assert!((v - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        let outside: C64 = nodes.iter().map(|(z, w)| w / (z + 1.0)).sum();
        assert!(outside.norm() < 1e-12);
    }
}
