//! Fourier differentiation and interpolation on periodic grids.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::fiber::{C64, ZERO};

/// Wavenumber of FFT bin `k` for a grid of length `n`, with the Nyquist bin
/// mapped to zero for odd-order derivatives.
fn wavenumber(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else if 2 * k == n {
        0.0
    } else {
        k as f64 - n as f64
    }
}

/// Plans for forward and inverse transforms of one length.
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![ZERO; len],
        }
    }

    /// Differentiates one periodic line of samples (period 2π) in place.
    /// Constant lines map to exact zeros.
    pub fn differentiate(&mut self, line: &mut [C64]) {
        debug_assert_eq!(line.len(), self.n);
        if line.iter().all(|&v| v == line[0]) {
            line.fill(ZERO);
            return;
        }
        self.forward.process_with_scratch(line, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for (k, v) in line.iter_mut().enumerate() {
            *v *= C64::new(0.0, wavenumber(k, self.n) * scale);
        }
        self.inverse.process_with_scratch(line, &mut self.scratch);
    }

    /// Normalised Fourier coefficients `c_k` with `f(x_j) = Σ_k c_k e^{ikx_j}`.
    pub fn coefficients(&self, line: &[C64]) -> Vec<C64> {
        let mut buf = line.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Weights `w_j` such that the trigonometric interpolant at `x` equals
    /// `Σ_j w_j f(x_j)`. The Nyquist mode is split symmetrically.
    pub fn interpolation_weights(&self, x: f64) -> Vec<C64> {
        let n = self.n;
        let h = 2.0 * PI / n as f64;
        // Exact hit on a node.
        let r = x.rem_euclid(2.0 * PI) / h;
        if (r - r.round()).abs() < 1e-12 {
            let mut w = vec![ZERO; n];
            w[(r.round() as usize) % n] = C64::new(1.0, 0.0);
            return w;
        }
        (0..n)
            .map(|j| {
                let xj = j as f64 * h;
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    let kk = wavenumber(k, n);
                    if 2 * k == n {
                        s += ((n as f64 / 2.0) * (x - xj)).cos();
                    } else {
                        s += C64::from_polar(1.0, kk * (x - xj));
                    }
                }
                s / n as f64
            })
            .collect()
    }
}

/// Applies `op` to every line of `data` along one axis.
///
/// `data` is viewed as `outer × len × inner` with the transformed axis in the
/// middle; `inner` is the stride between consecutive samples of a line.
pub fn for_each_line(
    data: &mut [C64],
    outer: usize,
    len: usize,
    inner: usize,
    mut op: impl FnMut(&mut [C64]),
) {
    let mut line = vec![ZERO; len];
    for o in 0..outer {
        let base = o * len * inner;
        for i in 0..inner {
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * inner + i];
            }
            op(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[base + k * inner + i] = *v;
            }
        }
    }
}
