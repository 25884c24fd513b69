//! Flat model manifolds.
//!
//! The closed manifold is the circle `S¹ = ℝ/2πℤ` (n = 1) or the square torus
//! `T² = (ℝ/2πℤ)²` (n = 2). The manifold with boundary `X` is the half
//! `x ∈ [0, π]` of the circle, respectively the cylinder `x₂ ∈ [0, π]` of the
//! torus. The last coordinate is always the one normal to `∂X`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling layout of the closed model manifold and of its cosphere bundle.
///
/// Base points form a uniform periodic grid with `n` points per axis; grid
/// points are ordered with the first axis slowest. Directions are the two
/// points `±1` of the cosphere when n = 1 and `dirs` equispaced angles on the
/// unit circle when n = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelManifold {
    dim: usize,
    n: usize,
    dirs: usize,
}

fn check_resolution(what: &str, value: usize) -> Result<()> {
    if value < 8 || !value.is_power_of_two() {
        return Err(Error::InvalidManifold(format!(
            "{what} must be a power of two >= 8, got {value}"
        )));
    }
    Ok(())
}

impl ModelManifold {
    /// The circle with `n` base points.
    pub fn circle(n: usize) -> Result<Self> {
        check_resolution("base resolution", n)?;
        Ok(Self { dim: 1, n, dirs: 2 })
    }

    /// The torus with `n × n` base points and `dirs` cosphere angles.
    pub fn torus(n: usize, dirs: usize) -> Result<Self> {
        check_resolution("base resolution", n)?;
        check_resolution("direction resolution", dirs)?;
        Ok(Self { dim: 2, n, dirs })
    }

    /// Builds either model from its dimension.
    pub fn new(dim: usize, n: usize, dirs: usize) -> Result<Self> {
        match dim {
            1 => Self::circle(n),
            2 => Self::torus(n, dirs),
            _ => Err(Error::UnsupportedDimension {
                dim,
                what: "model manifolds exist for n = 1 and n = 2",
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Base points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cosphere samples per base point.
    pub fn dirs(&self) -> usize {
        self.dirs
    }

    /// Total number of base points.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Per-axis grid indices of a point.
    pub fn axis_indices(&self, point: usize) -> [usize; 2] {
        match self.dim {
            1 => [point, 0],
            _ => [point / self.n, point % self.n],
        }
    }

    pub fn point_index(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.n + idx[1],
        }
    }

    /// Coordinates of a grid point; unused trailing entries are zero.
    pub fn coords(&self, point: usize) -> [f64; 2] {
        let h = self.spacing();
        let [i, j] = self.axis_indices(point);
        match self.dim {
            1 => [i as f64 * h, 0.0],
            _ => [i as f64 * h, j as f64 * h],
        }
    }

    /// Grid index along the axis normal to the boundary.
    pub fn normal_index(&self, point: usize) -> usize {
        self.axis_indices(point)[self.dim - 1]
    }

    /// Whether a grid point lies in X. Boundary points are included.
    pub fn in_x(&self, point: usize) -> bool {
        2 * self.normal_index(point) <= self.n
    }

    /// Whether a grid point lies on ∂X.
    pub fn on_boundary(&self, point: usize) -> bool {
        let i = self.normal_index(point);
        i == 0 || 2 * i == self.n
    }

    /// Unit covector of a direction sample.
    pub fn direction(&self, dir: usize) -> [f64; 2] {
        match self.dim {
            1 => {
                if dir == 0 {
                    [1.0, 0.0]
                } else {
                    [-1.0, 0.0]
                }
            }
            _ => {
                let theta = self.angle(dir);
                [theta.cos(), theta.sin()]
            }
        }
    }

    /// Angle of a direction sample (n = 2), or 0/π for the two circle directions.
    pub fn angle(&self, dir: usize) -> f64 {
        2.0 * PI * dir as f64 / self.dirs as f64
    }

    /// Quadrature weight of one base point.
    pub fn volume_weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Quadrature weight of one cosphere sample: counting measure for n = 1,
    /// arc length for n = 2.
    pub fn cosphere_weight(&self) -> f64 {
        match self.dim {
            1 => 1.0,
            _ => 2.0 * PI / self.dirs as f64,
        }
    }

    /// The `(2π)^n` normalisation of the interior residue density.
    pub fn residue_normalization(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// The boundary circle of the cylinder, sampled like the first axis.
    pub fn boundary_circle(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension {
                dim: self.dim,
                what: "the boundary of the half circle has no cosphere",
            });
        }
        Self::circle(self.n)
    }
}
