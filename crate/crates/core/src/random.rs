//! Seeded generators for band-limited symbols and idempotent matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiber::{C64, ZERO};
use crate::manifold::ModelManifold;
use crate::symbol::{ClassicalSymbol, HomogeneousTerm};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A random homogeneous term whose samples are trigonometric polynomials:
/// x-frequencies `|k| ≤ bandwidth` per axis and, for n = 2, angular
/// frequencies `|l| ≤ theta_bandwidth`. For n = 1 the two directions are
/// independent.
pub fn band_limited_term<R: Rng>(
    manifold: ModelManifold,
    degree: i32,
    fiber: usize,
    bandwidth: usize,
    theta_bandwidth: usize,
    rng: &mut R,
) -> Result<HomogeneousTerm> {
    if 2 * bandwidth >= manifold.n() {
        return Err(Error::InvalidInput(format!(
            "x-bandwidth {bandwidth} is not resolved by {} grid points",
            manifold.n()
        )));
    }
    if manifold.dim() == 2 && 2 * theta_bandwidth >= manifold.dirs() {
        return Err(Error::InvalidInput(format!(
            "angular bandwidth {theta_bandwidth} is not resolved by {} directions",
            manifold.dirs()
        )));
    }
    let b = bandwidth as i64;
    let s = fiber * fiber;
    let freqs: Vec<[i64; 3]> = match manifold.dim() {
        1 => (-b..=b).flat_map(|k| [[k, 0, 0], [k, 0, 1]]).collect(),
        _ => {
            let l = theta_bandwidth as i64;
            let mut v = Vec::new();
            for k1 in -b..=b {
                for k2 in -b..=b {
                    for t in -l..=l {
                        v.push([k1, k2, t]);
                    }
                }
            }
            v
        }
    };
    let coeffs: Vec<Vec<C64>> = freqs
        .iter()
        .map(|_| (0..s).map(|_| unit_complex(rng)).collect())
        .collect();
    let mut data = vec![ZERO; manifold.points() * manifold.dirs() * s];
    for p in 0..manifold.points() {
        let x = manifold.coords(p);
        for d in 0..manifold.dirs() {
            let out = &mut data[(p * manifold.dirs() + d) * s..(p * manifold.dirs() + d + 1) * s];
            for (f, c) in freqs.iter().zip(&coeffs) {
                let phase = match manifold.dim() {
                    1 => {
                        if f[2] as usize != d {
                            continue;
                        }
                        f[0] as f64 * x[0]
                    }
                    _ => f[0] as f64 * x[0] + f[1] as f64 * x[1] + f[2] as f64 * manifold.angle(d),
                };
                let e = C64::from_polar(1.0, phase);
                for (o, ce) in out.iter_mut().zip(c) {
                    *o += ce * e;
                }
            }
        }
    }
    HomogeneousTerm::from_parts(manifold, degree, fiber, 0, data)
}

/// A random classical symbol with terms of degrees `leading, …, leading − order`,
/// each band-limited and scaled to unit largest entry.
pub fn classical_symbol<R: Rng>(
    manifold: ModelManifold,
    leading: i32,
    order: usize,
    fiber: usize,
    bandwidth: usize,
    theta_bandwidth: usize,
    rng: &mut R,
) -> Result<ClassicalSymbol> {
    let terms = (0..=order)
        .map(|j| {
            let t = band_limited_term(manifold, leading - j as i32, fiber, bandwidth, theta_bandwidth, rng)?;
            let largest = t.max_abs();
            Ok(if largest > 0.0 { t.scale(C64::new(1.0 / largest, 0.0)) } else { t })
        })
        .collect::<Result<Vec<_>>>()?;
    ClassicalSymbol::new(terms)
}

/// Random band-limited perturbation scaled so that the largest sample has
/// Frobenius norm `epsilon`.
pub fn perturbation<R: Rng>(
    manifold: ModelManifold,
    fiber: usize,
    epsilon: f64,
    bandwidth: usize,
    theta_bandwidth: usize,
    rng: &mut R,
) -> Result<HomogeneousTerm> {
    let v = band_limited_term(manifold, 0, fiber, bandwidth, theta_bandwidth, rng)?;
    let largest = v
        .samples()
        .chunks(fiber * fiber)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if largest == 0.0 {
        return Ok(v);
    }
    Ok(v.scale(C64::new(epsilon / largest, 0.0)))
}

/// A random idempotent of the given rank, `S diag(I_r, 0) S⁻¹` with a
/// well-conditioned, generally non-unitary `S`.
pub fn idempotent<R: Rng>(size: usize, rank: usize, rng: &mut R) -> DMatrix<C64> {
    assert!(rank <= size, "rank exceeds matrix size");
    loop {
        let s = DMatrix::from_fn(size, size, |i, j| {
            let diag = if i == j { C64::new(1.0, 0.0) } else { ZERO };
            diag + unit_complex(rng) * 0.4
        });
        let Some(inv) = s.clone().try_inverse() else {
            continue;
        };
        if inv.camax() > 20.0 {
            continue;
        }
        let d = DMatrix::from_fn(size, size, |i, j| {
            if i == j && i < rank {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        return &s * d * inv;
    }
}
