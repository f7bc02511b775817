//! Simulated vertical-array measurements: pointwise sampling, cable
//! displacement, additive white noise and averaging over transmissions.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dvr::DvrBasis;
use crate::error::{Error, Result};
use crate::field::CwField;
use crate::rng::{Purpose, RngStream};

/// Equispaced hydrophones at `z_j = j Δz`, `j = 1..=count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    count: usize,
    spacing: f64,
}

impl ArraySpec {
    /// The array must stay within the water column `[0, h]`.
    pub fn new(count: usize, spacing: f64, h: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("array needs at least one hydrophone".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!("array spacing must be positive, got {spacing}")));
        }
        if count as f64 * spacing > h * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "{count} hydrophones at {spacing} m extend below the water depth {h}"
            )));
        }
        Ok(Self { count, spacing })
    }

    /// All DVR grid depths that lie in the water column `[0, h]`.
    pub fn for_basis(basis: &DvrBasis, h: f64) -> Result<Self> {
        let count = basis.depths().iter().filter(|&&z| z <= h * (1.0 + 1e-12)).count();
        Self::new(count, basis.spacing(), h)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn depths(&self) -> Vec<f64> {
        (1..=self.count).map(|j| j as f64 * self.spacing).collect()
    }
}

/// Cable shape `ζ(z) = (ς/√2)(ζ₁ sin(πz/h) + ζ₂ sin(2πz/h))`, pinned at the
/// surface and at the bottom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementModel {
    pub varsigma: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub h: f64,
}

impl DisplacementModel {
    pub fn draw<R: Rng>(varsigma: f64, h: f64, rng: &mut R) -> Self {
        Self {
            varsigma,
            zeta1: rng.sample(StandardNormal),
            zeta2: rng.sample(StandardNormal),
            h,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let x = PI * z / self.h;
        self.varsigma / 2f64.sqrt() * (self.zeta1 * x.sin() + self.zeta2 * (2.0 * x).sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Clean,
    Displaced,
    Noisy,
    Averaged,
}

impl MeasurementKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Clean => "clean",
            Self::Displaced => "displaced",
            Self::Noisy => "noisy",
            Self::Averaged => "averaged",
        }
    }
}

/// Statistics of the additive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Circular complex Gaussian.
    #[default]
    Complex,
    /// Real Gaussian added to the real part only.
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub depths: Vec<f64>,
    pub values: Vec<Complex64>,
    pub kind: MeasurementKind,
    pub seed: Option<u64>,
    pub n_realizations: usize,
    /// `10 log10(signal / noise)` of the actual noise draw.
    pub realized_snr_db: Option<f64>,
}

impl Measurement {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j,z_j_m,re,im,kind,seed")?;
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        for (j, (z, v)) in self.depths.iter().zip(&self.values).enumerate() {
            writeln!(out, "{},{},{},{},{},{}", j + 1, z, v.re, v.im, self.kind.as_str(), seed)?;
        }
        Ok(())
    }
}

fn sample_at(field: &CwField, z: f64) -> Result<Complex64> {
    field.value_at(z)
}

/// `Ψ(z_j)` by linear interpolation on the field grid.
pub fn sample_field(field: &CwField, array: &ArraySpec) -> Result<Measurement> {
    let depths = array.depths();
    let values = depths
        .iter()
        .map(|&z| sample_at(field, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(Measurement {
        depths,
        values,
        kind: MeasurementKind::Clean,
        seed: None,
        n_realizations: 1,
        realized_snr_db: None,
    })
}

/// `Ψ(z_j + ζ(z_j))` for a given cable shape; displaced depths are clamped
/// to the field grid.
pub fn displace(field: &CwField, array: &ArraySpec, model: &DisplacementModel) -> Result<Measurement> {
    if !(model.varsigma >= 0.0) {
        return Err(Error::Domain(format!("displacement amplitude must be nonnegative, got {}", model.varsigma)));
    }
    let depths = array.depths();
    let zmax = field.grid.z_max();
    let values = depths
        .iter()
        .map(|&z| sample_at(field, (z + model.eval(z)).clamp(0.0, zmax)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Measurement {
        depths,
        values,
        kind: MeasurementKind::Displaced,
        seed: None,
        n_realizations: 1,
        realized_snr_db: None,
    })
}

/// Draws a cable shape from the displacement stream of `stream` and samples
/// the displaced array.
pub fn displace_seeded(
    field: &CwField,
    array: &ArraySpec,
    varsigma: f64,
    h: f64,
    stream: RngStream,
) -> Result<Measurement> {
    let mut rng = stream.rng(Purpose::Displacement);
    let model = DisplacementModel::draw(varsigma, h, &mut rng);
    let mut m = displace(field, array, &model)?;
    m.seed = Some(stream.seed);
    Ok(m)
}

/// Adds white noise calibrated against the energy of `meas` itself.
pub fn add_noise(meas: &Measurement, snr_db: f64, stream: RngStream) -> Result<Measurement> {
    add_noise_with_reference(meas, meas.energy(), snr_db, stream, NoiseKind::Complex)
}

/// Adds white noise whose expected energy is `reference_energy / 10^(snr/10)`.
pub fn add_noise_with_reference(
    meas: &Measurement,
    reference_energy: f64,
    snr_db: f64,
    stream: RngStream,
    kind: NoiseKind,
) -> Result<Measurement> {
    if !(reference_energy > 0.0) {
        return Err(Error::Degenerate("signal energy is zero; SNR undefined".into()));
    }
    if snr_db.is_nan() {
        return Err(Error::Domain("SNR is NaN".into()));
    }
    let mut out = meas.clone();
    out.kind = MeasurementKind::Noisy;
    out.seed = Some(stream.seed);
    if snr_db == f64::INFINITY {
        out.realized_snr_db = Some(f64::INFINITY);
        return Ok(out);
    }
    let n = meas.values.len() as f64;
    let variance = reference_energy / (n * 10f64.powf(snr_db / 10.0));
    let sigma = variance.sqrt();
    let mut rng = stream.rng(Purpose::Noise);
    let mut noise_energy = 0.0;
    for v in &mut out.values {
        let xi = match kind {
            NoiseKind::Complex => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * (sigma / 2f64.sqrt())
            }
            NoiseKind::Real => Complex64::new(sigma * rng.sample::<f64, _>(StandardNormal), 0.0),
        };
        noise_energy += xi.norm_sqr();
        *v += xi;
    }
    out.realized_snr_db = Some(10.0 * (reference_energy / noise_energy).log10());
    Ok(out)
}

/// One transmission: displaced sampling plus noise calibrated on the clean
/// energy at the hydrophones.
pub fn measure_realization(
    field: &CwField,
    array: &ArraySpec,
    clean_energy: f64,
    varsigma: f64,
    h: f64,
    snr_db: f64,
    stream: RngStream,
    kind: NoiseKind,
) -> Result<Measurement> {
    let displaced = displace_seeded(field, array, varsigma, h, stream)?;
    add_noise_with_reference(&displaced, clean_energy, snr_db, stream, kind)
}

/// Elementwise mean over realizations.
pub fn average_measurements(list: &[Measurement]) -> Result<Measurement> {
    let first = list
        .first()
        .ok_or_else(|| Error::Dimension("nothing to average".into()))?;
    let n = first.values.len();
    if list.iter().any(|m| m.values.len() != n || m.depths != first.depths) {
        return Err(Error::Dimension("measurements differ in geometry".into()));
    }
    let scale = 1.0 / list.len() as f64;
    let values = (0..n)
        .map(|j| list.iter().map(|m| m.values[j]).sum::<Complex64>() * scale)
        .collect();
    Ok(Measurement {
        depths: first.depths.clone(),
        values,
        kind: MeasurementKind::Averaged,
        seed: first.seed,
        n_realizations: list.len(),
        realized_snr_db: None,
    })
}
