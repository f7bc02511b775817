//! Range-independent shallow-water waveguide: a water column with a tanh
//! thermocline over a homogeneous lossy sediment, closed by a rigid basement.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decibels per neper, `20 log10(e)`.
pub const DB_PER_NEPER: f64 = 8.685_889_638_065_035;

/// Waveguide parameters. Speeds in m/s, depths in m, densities in g/cm³.
///
/// The sediment attenuation is `att_coeff * f^2` dB/m with `f` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentModel {
    pub c0: f64,
    pub delta_c: f64,
    pub z_c: f64,
    pub delta_z: f64,
    pub c_b: f64,
    /// Water–sediment interface depth `h`.
    pub water_depth: f64,
    /// Sediment–basement interface depth `L`.
    pub basement_depth: f64,
    pub rho_wat: f64,
    pub rho_sed: f64,
    pub att_coeff: f64,
}

impl Default for EnvironmentModel {
    fn default() -> Self {
        Self {
            c0: 1500.0,
            delta_c: 25.0,
            z_c: 50.0,
            delta_z: 10.0,
            c_b: 1600.0,
            water_depth: 100.0,
            basement_depth: 300.0,
            rho_wat: 1.0,
            rho_sed: 1.7,
            att_coeff: 0.42e-6,
        }
    }
}

impl EnvironmentModel {
    /// Constant sound speed and density everywhere, no losses. Useful as an
    /// ideal-waveguide reference; the nominal interface sits at mid-depth.
    pub fn isovelocity(c: f64, depth: f64) -> Self {
        Self {
            c0: c,
            delta_c: 0.0,
            z_c: 0.25 * depth,
            delta_z: 1.0,
            c_b: c,
            water_depth: 0.5 * depth,
            basement_depth: depth,
            rho_wat: 1.0,
            rho_sed: 1.0,
            att_coeff: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.c0,
            self.delta_c,
            self.z_c,
            self.delta_z,
            self.c_b,
            self.water_depth,
            self.basement_depth,
            self.rho_wat,
            self.rho_sed,
            self.att_coeff,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("environment parameters must be finite".into()));
        }
        if !(0.0 < self.z_c && self.z_c < self.water_depth && self.water_depth < self.basement_depth) {
            return Err(Error::Config(format!(
                "need 0 < z_c < h < L, got z_c={}, h={}, L={}",
                self.z_c, self.water_depth, self.basement_depth
            )));
        }
        if self.delta_z <= 0.0 {
            return Err(Error::Config("thermocline width delta_z must be positive".into()));
        }
        if self.delta_c < 0.0 {
            return Err(Error::Config("delta_c must be nonnegative".into()));
        }
        if self.rho_wat <= 0.0 || self.rho_sed <= 0.0 {
            return Err(Error::Config("densities must be positive".into()));
        }
        if self.c0 - self.delta_c <= 0.0 {
            return Err(Error::Config("minimum sound speed must be positive".into()));
        }
        if self.c_b < self.c_min() {
            return Err(Error::Config(format!(
                "sediment speed {} is below the water minimum {}",
                self.c_b,
                self.c_min()
            )));
        }
        if self.att_coeff < 0.0 {
            return Err(Error::Config("att_coeff must be nonnegative".into()));
        }
        Ok(())
    }

    /// Minimum water sound speed `c0 - delta_c`, used as the reference speed.
    pub fn c_min(&self) -> f64 {
        self.c0 - self.delta_c
    }

    fn check_depth(&self, z: f64) -> Result<()> {
        let slack = 1e-9 * self.basement_depth;
        if !(z >= -slack && z <= self.basement_depth + slack) {
            return Err(Error::Domain(format!(
                "depth {z} outside [0, {}]",
                self.basement_depth
            )));
        }
        Ok(())
    }

    fn check_frequency(f: f64) -> Result<()> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Domain(format!("frequency must be positive, got {f}")));
        }
        Ok(())
    }

    pub fn sound_speed(&self, z: f64) -> Result<f64> {
        self.check_depth(z)?;
        Ok(self.sound_speed_unchecked(z))
    }

    /// The interface depth itself belongs to the sediment.
    pub(crate) fn sound_speed_unchecked(&self, z: f64) -> f64 {
        if z < self.water_depth {
            self.c0 - 0.5 * self.delta_c * (1.0 + ((z - self.z_c) / self.delta_z).tanh())
        } else {
            self.c_b
        }
    }

    pub fn density(&self, z: f64) -> Result<f64> {
        self.check_depth(z)?;
        Ok(self.density_unchecked(z))
    }

    pub(crate) fn density_unchecked(&self, z: f64) -> f64 {
        if z < self.water_depth {
            self.rho_wat
        } else {
            self.rho_sed
        }
    }

    /// Sediment attenuation `att_coeff * f^2` in dB/m.
    pub fn attenuation_db_per_m(&self, f: f64) -> f64 {
        self.att_coeff * f * f
    }

    pub fn reference_wavenumber(&self, f: f64) -> Result<f64> {
        Self::check_frequency(f)?;
        Ok(2.0 * PI * f / self.c_min())
    }

    /// Squared refractive index relative to `c_min`.
    ///
    /// The real part is `(c_min / c(z))^2`. In the sediment the imaginary part
    /// is `2 Re(n) a / k0` with `a` the attenuation in nepers/m.
    pub fn refractive_index_sq(&self, z: f64, f: f64) -> Result<Complex64> {
        self.check_depth(z)?;
        Self::check_frequency(f)?;
        Ok(self.refractive_index_sq_unchecked(z, f))
    }

    pub(crate) fn refractive_index_sq_unchecked(&self, z: f64, f: f64) -> Complex64 {
        let n_re = self.c_min() / self.sound_speed_unchecked(z);
        let im = if z < self.water_depth {
            0.0
        } else {
            let k0 = 2.0 * PI * f / self.c_min();
            let alpha_np = self.attenuation_db_per_m(f) / DB_PER_NEPER;
            2.0 * n_re * alpha_np / k0
        };
        Complex64::new(n_re * n_re, im)
    }

    /// Imaginary part of `n^2` in the sediment, zero in the water.
    pub(crate) fn sediment_loss(&self, f: f64) -> f64 {
        let n_re = self.c_min() / self.c_b;
        let k0 = 2.0 * PI * f / self.c_min();
        2.0 * n_re * self.attenuation_db_per_m(f) / DB_PER_NEPER / k0
    }
}
