//! Kernels for the small fiber matrices stored inside symbol samples.
//!
//! Fiber matrices are `m × m`, row-major, and live in contiguous slices of
//! length `m²`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `out += s · a · b`.
#[inline]
pub fn mul_acc(a: &[C64], b: &[C64], s: C64, out: &mut [C64], m: usize) {
    if m == 2 {
        let (a0, a1, a2, a3) = (a[0], a[1], a[2], a[3]);
        let (b0, b1, b2, b3) = (b[0], b[1], b[2], b[3]);
        let p = [a0 * b0 + a1 * b2, a0 * b1 + a1 * b3, a2 * b0 + a3 * b2, a2 * b1 + a3 * b3];
        if s == ONE {
            for (o, v) in out[..4].iter_mut().zip(p) {
                *o += v;
            }
        } else {
            for (o, v) in out[..4].iter_mut().zip(p) {
                *o += s * v;
            }
        }
        return;
    }
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == ZERO {
                continue;
            }
            let f = s * aik;
            for j in 0..m {
                out[i * m + j] += f * b[k * m + j];
            }
        }
    }
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn invert(a: &[C64], m: usize) -> Option<Vec<C64>> {
    let mut out = vec![ZERO; m * m];
    invert_into(a, m, &mut out).then_some(out)
}

/// Inverse written into `out`; returns false for singular input. Sizes 1
/// and 2 use closed forms.
pub fn invert_into(a: &[C64], m: usize, out: &mut [C64]) -> bool {
    let usable = |d: C64| d.norm() != 0.0 && d.norm().is_finite();
    match m {
        1 => {
            if !usable(a[0]) {
                return false;
            }
            out[0] = ONE / a[0];
            true
        }
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            let scale = a[..4].iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
            if !usable(det) || det.norm() <= 1e-14 * scale * scale {
                return match gauss_jordan(a, m) {
                    Some(v) => {
                        out[..4].copy_from_slice(&v);
                        true
                    }
                    None => false,
                };
            }
            let r = ONE / det;
            out[0] = a[3] * r;
            out[1] = -a[1] * r;
            out[2] = -a[2] * r;
            out[3] = a[0] * r;
            true
        }
        _ => match gauss_jordan(a, m) {
            Some(v) => {
                out[..m * m].copy_from_slice(&v);
                true
            }
            None => false,
        },
    }
}

fn gauss_jordan(a: &[C64], m: usize) -> Option<Vec<C64>> {
    let mut work = a.to_vec();
    let mut inv = identity(m);
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&r, &s| work[r * m + col].norm().total_cmp(&work[s * m + col].norm()))?;
        let p = work[pivot * m + col];
        if p.norm() == 0.0 || !p.norm().is_finite() {
            return None;
        }
        if pivot != col {
            for j in 0..m {
                work.swap(pivot * m + j, col * m + j);
                inv.swap(pivot * m + j, col * m + j);
            }
        }
        let pinv = ONE / p;
        for j in 0..m {
            work[col * m + j] *= pinv;
            inv[col * m + j] *= pinv;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = work[r * m + col];
            if f == ZERO {
                continue;
            }
            for j in 0..m {
                let wc = work[col * m + j];
                let ic = inv[col * m + j];
                work[r * m + j] -= f * wc;
                inv[r * m + j] -= f * ic;
            }
        }
    }
    Some(inv)
}

/// Inverse of a matrix-valued jet stored as `[jet][m × m]`, using
/// `g_γ = −f₀⁻¹ Σ_{α+β=γ, α≠0} f_α g_β`. `table` is the jet product table.
pub fn invert_jet(f: &[C64], m: usize, table: &[(usize, usize, usize)]) -> Option<Vec<C64>> {
    let s = m * m;
    let jets = f.len() / s;
    let inv0 = invert(&f[..s], m)?;
    let mut g = vec![ZERO; f.len()];
    g[..s].copy_from_slice(&inv0);
    let mut acc = vec![ZERO; s];
    for k in 1..jets {
        acc.fill(ZERO);
        for &(i, j, kk) in table {
            if kk == k && i != 0 {
                mul_acc(&f[i * s..(i + 1) * s], &g[j * s..(j + 1) * s], ONE, &mut acc, m);
            }
        }
        let (done, rest) = g.split_at_mut(k * s);
        mul_acc(&done[..s], &acc, -ONE, &mut rest[..s], m);
    }
    Some(g)
}

pub fn identity(m: usize) -> Vec<C64> {
    let mut id = vec![ZERO; m * m];
    for i in 0..m {
        id[i * m + i] = ONE;
    }
    id
}

pub fn trace(a: &[C64], m: usize) -> C64 {
    (0..m).map(|i| a[i * m + i]).sum()
}

/// Largest entry modulus.
pub fn max_abs(a: &[C64]) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn to_matrix(a: &[C64], m: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(m, m, a)
}

pub fn from_matrix(a: &DMatrix<C64>) -> Vec<C64> {
    let m = a.nrows();
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Checks that a matrix is square and idempotent to `tol` (max entry).
pub fn check_idempotent(a: &DMatrix<C64>, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = (a * a - a).camax();
    if defect > tol {
        return Err(Error::InvalidInput(format!(
            "matrix is not idempotent: max |M² - M| = {defect:e}"
        )));
    }
    Ok(())
}
