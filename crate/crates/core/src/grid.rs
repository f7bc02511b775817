use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::env::EnvironmentModel;
use crate::error::{Error, Result};

/// Uniform grid on `[0, z_max]` including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthGrid {
    z_max: f64,
    n_points: usize,
}

impl DepthGrid {
    pub fn new(z_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::Domain(format!("depth grid needs at least 3 points, got {n_points}")));
        }
        if !(z_max > 0.0 && z_max.is_finite()) {
            return Err(Error::Domain(format!("grid extent must be positive, got {z_max}")));
        }
        Ok(Self { z_max, n_points })
    }

    /// Default mode-solver grid: at least 2001 points and 20 points per
    /// acoustic wavelength at `c_min`, with the point count rounded so that
    /// the water–sediment interface falls on a node of both this grid and the
    /// grid with twice the spacing.
    pub fn for_environment(env: &EnvironmentModel, f: f64) -> Result<Self> {
        if !(f > 0.0) {
            return Err(Error::Domain(format!("frequency must be positive, got {f}")));
        }
        let wavelength = env.c_min() / f;
        let wanted = ((20.0 * env.basement_depth / wavelength).ceil() as usize + 1).max(2001);
        let step = 2 * interface_period(env.water_depth / env.basement_depth);
        let cells = (wanted - 1).div_ceil(step) * step;
        Self::new(env.basement_depth, cells + 1)
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.z_max / (self.n_points - 1) as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.z_max
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.z(i)).collect()
    }

    /// Index of the node nearest to `z`, if `z` lies on the grid within
    /// `tol * spacing`.
    pub fn node_at(&self, z: f64, tol: f64) -> Option<usize> {
        let x = z / self.spacing();
        let i = x.round();
        if i < 0.0 || i as usize >= self.n_points {
            return None;
        }
        ((x - i).abs() <= tol).then_some(i as usize)
    }

    /// Number of leading nodes with `z <= depth`.
    pub fn count_up_to(&self, depth: f64) -> usize {
        let d = self.spacing();
        let n = ((depth / d) + 1e-9).floor() as usize + 1;
        n.min(self.n_points)
    }

    /// Linear interpolation of nodal values at `z`.
    pub fn interpolate(&self, values: &[Complex64], z: f64) -> Result<Complex64> {
        if values.len() != self.n_points {
            return Err(Error::Dimension(format!(
                "{} values on a {}-point grid",
                values.len(),
                self.n_points
            )));
        }
        let slack = 1e-9 * self.z_max;
        if !(z >= -slack && z <= self.z_max + slack) {
            return Err(Error::Domain(format!("depth {z} outside [0, {}]", self.z_max)));
        }
        Ok(interpolate_uniform(values, self.spacing(), z))
    }
}

/// Linear interpolation on a uniform grid starting at zero; clamps at the ends.
pub(crate) fn interpolate_uniform<T>(values: &[T], spacing: f64, z: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = values.len();
    let x = (z / spacing).clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 2);
    let t = x - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// Smallest `q <= 100` with `ratio * q` within 1e-9 of an integer, or 1.
fn interface_period(ratio: f64) -> usize {
    (1..=100)
        .find(|&q| {
            let x = ratio * q as f64;
            (x - x.round()).abs() < 1e-9
        })
        .unwrap_or(1)
}
