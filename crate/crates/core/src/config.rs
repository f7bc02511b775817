//! Experiment configuration, read from and written to TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dvr::{build_dvr, effective_depth, DvrBasis};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::modes::{ModeFilter, ModeSolverOptions};
use crate::sensing::NoiseKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub environment: EnvironmentModel,
    #[serde(default)]
    pub modes: ModesConfig,
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<ArrayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    #[serde(default)]
    pub filter: ModeFilter,
    #[serde(default = "yes")]
    pub richardson: bool,
}

fn yes() -> bool {
    true
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            filter: ModeFilter::default(),
            richardson: true,
        }
    }
}

impl ModesConfig {
    pub fn options(&self) -> ModeSolverOptions {
        ModeSolverOptions {
            filter: self.filter,
            richardson: self.richardson,
        }
    }
}

/// Point source and receiver ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Source depth in m.
    pub z_s: f64,
    /// Ranges in m.
    #[serde(default)]
    pub ranges: Vec<f64>,
    /// CW frequency in Hz for single-frequency commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
}

/// Either a DVR basis `{j_max, l_eff}` or an equispaced array `{spacing}`
/// whose basis uses a fictitious bottom depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    /// Hydrophones in the water column; sets `j_max` for the basis depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hydrophones: Option<usize>,
    /// Basis depth in m; defaults to the basement depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_eff: Option<f64>,
    /// Hydrophone spacing in m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

impl ArrayConfig {
    pub fn basis(&self, env: &EnvironmentModel) -> Result<DvrBasis> {
        let given = [self.j_max.is_some(), self.hydrophones.is_some(), self.spacing.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(Error::Config(
                "array: give exactly one of j_max, hydrophones or spacing".into(),
            ));
        }
        if let Some(dz) = self.spacing {
            if self.l_eff.is_some() {
                return Err(Error::Config("array.l_eff is derived from array.spacing; give only one".into()));
            }
            return basis_for_spacing(dz, env);
        }
        let l_eff = self.l_eff.unwrap_or(env.basement_depth);
        if l_eff < env.water_depth {
            return Err(Error::Config(format!(
                "array.l_eff = {l_eff} is shallower than the water depth {}",
                env.water_depth
            )));
        }
        match (self.j_max, self.hydrophones) {
            (Some(j_max), _) => build_dvr(j_max, l_eff),
            (_, Some(count)) => basis_for_hydrophones(count, l_eff, env.water_depth),
            _ => unreachable!(),
        }
    }
}

/// Basis on `[0, l_eff]` with exactly `count` DVR depths in `[0, h]`, using
/// the smallest such `j_max`.
pub fn basis_for_hydrophones(count: usize, l_eff: f64, h: f64) -> Result<DvrBasis> {
    if count == 0 {
        return Err(Error::Config("array.hydrophones must be positive".into()));
    }
    let j_max = ((count as f64 * l_eff / h - 0.5).ceil().max(count as f64)) as usize;
    let basis = build_dvr(j_max, l_eff)?;
    let inside = basis.depths().iter().filter(|&&z| z <= h).count();
    if inside != count {
        return Err(Error::Config(format!(
            "no basis on [0, {l_eff}] places exactly {count} depths in [0, {h}]"
        )));
    }
    Ok(basis)
}

/// Basis with spacing `dz` and the smallest `j_max` whose fictitious depth
/// `(j_max + 1/2) dz` reaches the basement.
pub fn basis_for_spacing(dz: f64, env: &EnvironmentModel) -> Result<DvrBasis> {
    if !(dz > 0.0 && dz.is_finite()) {
        return Err(Error::Config(format!("array spacing must be positive, got {dz}")));
    }
    let j_max = ((env.basement_depth / dz - 0.5).ceil().max(1.0)) as usize;
    let l_eff = effective_depth(dz, j_max, env.water_depth)?;
    build_dvr(j_max, l_eff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Frequency,
    Spacing,
}

/// Sweep grid: explicit `values`, or `start..=stop` in steps of `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Fidelity threshold of the confidence range.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.9
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let values = match &self.values {
            Some(v) => {
                if self.start.is_some() || self.stop.is_some() || self.step.is_some() {
                    return Err(Error::Config("sweep: give either values or start/stop/step".into()));
                }
                v.clone()
            }
            None => {
                let (start, stop, step) = match self.kind {
                    SweepKind::Frequency => (
                        self.start.unwrap_or(10.0),
                        self.stop.unwrap_or(800.0),
                        self.step.unwrap_or(5.0),
                    ),
                    SweepKind::Spacing => (
                        self.start.unwrap_or(1.0),
                        self.stop.unwrap_or(15.0),
                        self.step.unwrap_or(0.5),
                    ),
                };
                arange(start, stop, step)?
            }
        };
        if values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep grid must be strictly ascending".into()));
        }
        Ok(values)
    }
}

/// `start, start + step, ...` up to `stop` inclusive, without accumulating
/// rounding error.
pub fn arange(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::Config(format!("bad sweep range {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// SNR values in dB.
    pub snr_db: Vec<f64>,
    /// RMS hydrophone displacement in m.
    #[serde(default)]
    pub varsigma: f64,
    /// Transmissions averaged before reconstruction.
    #[serde(default = "one")]
    pub realizations: usize,
    /// Independent batches for Monte-Carlo statistics.
    #[serde(default = "hundred")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub kind: NoiseKind,
}

fn one() -> usize {
    1
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// Centre frequencies in Hz.
    pub f_c: Vec<f64>,
    /// Time window in s; derived from modal group speeds when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Frequency count; raised from 512 as needed to cover the window when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_freq: Option<usize>,
    #[serde(default = "default_n_time")]
    pub n_time: usize,
    /// Depth samples over the water column.
    #[serde(default = "default_n_depth")]
    pub n_depth: usize,
}

fn default_n_time() -> usize {
    2048
}

fn default_n_depth() -> usize {
    201
}

impl PulseConfig {
    pub fn window(&self) -> Result<Option<(f64, f64)>> {
        match (self.t_start, self.t_end) {
            (Some(a), Some(b)) if b > a => Ok(Some((a, b))),
            (None, None) => Ok(None),
            (Some(a), Some(b)) => Err(Error::Config(format!("pulse window [{a}, {b}] is empty"))),
            _ => Err(Error::Config("pulse: give both t_start and t_end or neither".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let env = &self.environment;
        env.validate().map_err(|e| Error::Config(format!("environment: {e}")))?;
        let h = env.water_depth;
        let z_s = self.source.z_s;
        if !(z_s > 0.0 && z_s < h) {
            return Err(Error::Config(format!("source.z_s = {z_s} must lie strictly inside (0, {h})")));
        }
        if let Some(r) = self.source.ranges.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Config(format!("source.ranges: range {r} must be positive")));
        }
        if let Some(f) = self.source.frequency {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("source.frequency = {f} must be positive")));
            }
        }
        if let Some(array) = &self.array {
            array.basis(env)?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.grid()?;
            if !(sweep.threshold > 0.0 && sweep.threshold < 1.0) {
                return Err(Error::Config(format!("sweep.threshold = {} must lie in (0, 1)", sweep.threshold)));
            }
        }
        if let Some(noise) = &self.noise {
            if noise.seed.is_none() {
                return Err(Error::Config("noise.seed is required when noise is enabled".into()));
            }
            if noise.snr_db.is_empty() || noise.snr_db.iter().any(|s| s.is_nan()) {
                return Err(Error::Config("noise.snr_db needs at least one value".into()));
            }
            if !(noise.varsigma >= 0.0 && noise.varsigma.is_finite()) {
                return Err(Error::Config(format!("noise.varsigma = {} must be nonnegative", noise.varsigma)));
            }
            if noise.realizations == 0 || noise.trials == 0 {
                return Err(Error::Config("noise.realizations and noise.trials must be positive".into()));
            }
        }
        if let Some(pulse) = &self.pulse {
            if pulse.f_c.is_empty() || pulse.f_c.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
                return Err(Error::Config("pulse.f_c needs positive centre frequencies".into()));
            }
            pulse.window()?;
            if let Some(n) = pulse.n_freq {
                if n < 64 {
                    return Err(Error::Config(format!("pulse.n_freq = {n} is below 64")));
                }
            }
            if pulse.n_time < 2 || pulse.n_depth < 2 {
                return Err(Error::Config("pulse.n_time and pulse.n_depth must be at least 2".into()));
            }
        }
        Ok(())
    }

    /// Overrides the noise seed, e.g. from the command line.
    pub fn set_seed(&mut self, seed: u64) {
        if let Some(noise) = &mut self.noise {
            noise.seed = Some(seed);
        }
    }

    pub fn frequency(&self) -> Result<f64> {
        self.source
            .frequency
            .ok_or_else(|| Error::Config("source.frequency is required for this command".into()))
    }

    pub fn array(&self) -> Result<&ArrayConfig> {
        self.array
            .as_ref()
            .ok_or_else(|| Error::Config("an [array] section is required for this command".into()))
    }

    pub fn ranges(&self) -> Result<&[f64]> {
        if self.source.ranges.is_empty() {
            return Err(Error::Config("source.ranges is required for this command".into()));
        }
        Ok(&self.source.ranges)
    }

    pub fn pulse(&self) -> Result<&PulseConfig> {
        self.pulse
            .as_ref()
            .ok_or_else(|| Error::Config("a [pulse] section is required for this command".into()))
    }

    pub fn noise(&self) -> Result<&NoiseConfig> {
        self.noise
            .as_ref()
            .ok_or_else(|| Error::Config("a [noise] section is required for this command".into()))
    }
}
