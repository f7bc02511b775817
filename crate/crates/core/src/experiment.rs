//! Experiment drivers shared by the command-line tool and the test suites:
//! fidelity sweeps over frequency and spacing, profile comparisons and
//! Monte-Carlo noise batches.

use std::io::Write;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::basis_for_spacing;
use crate::dvr::{reconstruct, DvrBasis, Reconstruction};
use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::field::{
    arrival_window, cw_field, frequency_count_for_window, pulse_components, time_axis, CwField, PulseField,
    SignalSpectrum, SpectralGrid,
};
use crate::grid::DepthGrid;
use crate::metrics::{confidence_range, fidelity_cw, fidelity_pulse, ConfidenceRange};
use crate::modes::{solve_modes_with, ModeSet, ModeSolverOptions};
use crate::rng::{derive_seed, RngStream};
use crate::sensing::{average_measurements, measure_realization, sample_field, ArraySpec, Measurement, NoiseKind};

/// Noise and displacement applied to each transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub snr_db: f64,
    /// RMS hydrophone displacement in m.
    pub varsigma: f64,
    /// Transmissions averaged before reconstruction.
    pub realizations: usize,
    pub kind: NoiseKind,
}

/// Modes at `f` on the default grid for the environment.
pub fn modes_at(env: &EnvironmentModel, f: f64, options: ModeSolverOptions) -> Result<ModeSet> {
    let grid = DepthGrid::for_environment(env, f)?;
    solve_modes_with(env, f, &grid, options)
}

/// CW field on the mode grid.
pub fn field_from_modes(env: &EnvironmentModel, modes: &ModeSet, z_s: f64, r: f64) -> Result<CwField> {
    cw_field(env, modes, z_s, r, modes.grid())
}

/// Reconstruction of `field` from a measurement and its fidelity over
/// the water column.
pub fn reconstruct_and_score(
    field: &CwField,
    basis: &DvrBasis,
    meas: &Measurement,
    h: f64,
) -> Result<(Reconstruction, f64)> {
    let rec = reconstruct(basis, &meas.values)?;
    let f = fidelity_cw(field, &rec, h)?.value;
    Ok((rec, f))
}

/// Noiseless fidelity with every DVR depth in the water column sampled.
pub fn noiseless_fidelity(field: &CwField, basis: &DvrBasis, h: f64) -> Result<f64> {
    let array = ArraySpec::for_basis(basis, h)?;
    let meas = sample_field(field, &array)?;
    Ok(reconstruct_and_score(field, basis, &meas, h)?.1)
}

/// One Monte-Carlo trial: realization 0 alone and the mean over all
/// realizations, each reconstructed and scored.
#[derive(Debug, Clone)]
pub struct NoisyTrial {
    pub seed: u64,
    pub single: Reconstruction,
    pub averaged: Reconstruction,
    pub f_single: f64,
    pub f_averaged: f64,
    pub realized_snr_db: f64,
}

pub fn noisy_trial(
    field: &CwField,
    basis: &DvrBasis,
    h: f64,
    perturbation: &Perturbation,
    seed: u64,
) -> Result<NoisyTrial> {
    if perturbation.realizations == 0 {
        return Err(Error::Config("at least one realization is required".into()));
    }
    let array = ArraySpec::for_basis(basis, h)?;
    let clean = sample_field(field, &array)?;
    let energy = clean.energy();
    let list = (0..perturbation.realizations as u64)
        .map(|n| {
            measure_realization(
                field,
                &array,
                energy,
                perturbation.varsigma,
                h,
                perturbation.snr_db,
                RngStream::new(seed, n),
                perturbation.kind,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (single, f_single) = reconstruct_and_score(field, basis, &list[0], h)?;
    let mean = average_measurements(&list)?;
    let (averaged, f_averaged) = reconstruct_and_score(field, basis, &mean, h)?;
    Ok(NoisyTrial {
        seed,
        single,
        averaged,
        f_single,
        f_averaged,
        realized_snr_db: list[0].realized_snr_db.unwrap_or(f64::INFINITY),
    })
}

/// Seed of one sweep point, independent of evaluation order.
pub fn point_seed(seed: u64, f: f64, r: f64, z_s: f64, j_max: usize, snr_db: f64) -> u64 {
    derive_seed(
        seed,
        &[f.to_bits(), r.to_bits(), z_s.to_bits(), j_max as u64, snr_db.to_bits()],
    )
}

/// Fidelity versus frequency for every combination of range, source depth,
/// array and perturbation. Modes are solved once per frequency.
#[derive(Debug, Clone)]
pub struct FrequencySweep {
    pub env: EnvironmentModel,
    pub options: ModeSolverOptions,
    pub frequencies: Vec<f64>,
    pub ranges: Vec<f64>,
    pub sources: Vec<f64>,
    pub bases: Vec<DvrBasis>,
    /// Noiseless points are always included.
    pub perturbations: Vec<Perturbation>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub frequency: f64,
    pub range: f64,
    pub source_depth: f64,
    pub j_max: usize,
    pub hydrophones: usize,
    /// `+inf` for noiseless points.
    pub snr_db: f64,
    pub fidelity: f64,
}

/// Curve identity within a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveKey {
    pub range: f64,
    pub source_depth: f64,
    pub j_max: usize,
    pub hydrophones: usize,
    pub snr_db: f64,
}

impl CurveKey {
    pub fn label(&self) -> String {
        format!(
            "r={} m, z_s={} m, J={}, snr={} dB",
            self.range, self.source_depth, self.hydrophones, self.snr_db
        )
    }
}

impl SweepRecord {
    pub fn key(&self) -> CurveKey {
        CurveKey {
            range: self.range,
            source_depth: self.source_depth,
            j_max: self.j_max,
            hydrophones: self.hydrophones,
            snr_db: self.snr_db,
        }
    }
}

impl FrequencySweep {
    pub fn run(&self) -> Result<Vec<SweepRecord>> {
        let h = self.env.water_depth;
        let arrays = self
            .bases
            .iter()
            .map(|b| ArraySpec::for_basis(b, h))
            .collect::<Result<Vec<_>>>()?;
        let per_frequency = self
            .frequencies
            .par_iter()
            .map(|&f| self.at_frequency(f, &arrays))
            .collect::<Result<Vec<_>>>()?;
        Ok(per_frequency.into_iter().flatten().collect())
    }

    fn at_frequency(&self, f: f64, arrays: &[ArraySpec]) -> Result<Vec<SweepRecord>> {
        let h = self.env.water_depth;
        let modes = modes_at(&self.env, f, self.options)?;
        let mut out = Vec::new();
        for &r in &self.ranges {
            for &z_s in &self.sources {
                let field = field_from_modes(&self.env, &modes, z_s, r)?;
                for (basis, array) in self.bases.iter().zip(arrays) {
                    let record = |snr_db: f64, fidelity: f64| SweepRecord {
                        frequency: f,
                        range: r,
                        source_depth: z_s,
                        j_max: basis.j_max(),
                        hydrophones: array.count(),
                        snr_db,
                        fidelity,
                    };
                    out.push(record(f64::INFINITY, degenerate_as_nan(noiseless_fidelity(&field, basis, h), f)?));
                    for p in &self.perturbations {
                        let seed = point_seed(self.seed, f, r, z_s, basis.j_max(), p.snr_db);
                        let trial = noisy_trial(&field, basis, h, p, seed).map(|t| t.f_averaged);
                        out.push(record(p.snr_db, degenerate_as_nan(trial, f)?));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// A field that vanishes on the array has no defined fidelity.
fn degenerate_as_nan(value: Result<f64>, f: f64) -> Result<f64> {
    match value {
        Err(Error::Degenerate(msg)) => {
            warn!("{f} Hz: {msg}; fidelity recorded as NaN");
            Ok(f64::NAN)
        }
        other => other,
    }
}

/// Confidence range of every curve in a sweep, in order of first appearance.
pub fn confidence_ranges(records: &[SweepRecord], threshold: f64) -> Result<Vec<(CurveKey, ConfidenceRange)>> {
    let mut keys: Vec<CurveKey> = Vec::new();
    for r in records {
        if !keys.contains(&r.key()) {
            keys.push(r.key());
        }
    }
    keys.into_iter()
        .map(|key| {
            let (x, y): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter(|r| r.key() == key)
                .map(|r| (r.frequency, r.fidelity))
                .unzip();
            Ok((key, confidence_range(&x, &y, threshold)?))
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    writeln!(out, "f_hz,r_m,z_s_m,j_max,J,snr_db,F")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.frequency, r.range, r.source_depth, r.j_max, r.hydrophones, r.snr_db, r.fidelity
        )?;
    }
    Ok(())
}

pub fn write_confidence_summary<W: Write>(ranges: &[(CurveKey, ConfidenceRange)], mut out: W) -> Result<()> {
    for (key, cr) in ranges {
        cr.write_summary(&mut out, &format!("\"{}\"", key.label()))?;
        if let Some(upper) = cr.upper_boundary() {
            writeln!(out, "upper_boundary = {upper}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Pulse synthesis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSettings {
    /// Derived from modal group speeds when absent.
    pub window: Option<(f64, f64)>,
    /// Raised from 512 as needed to cover the window when absent.
    pub n_freq: Option<usize>,
    pub n_time: usize,
    /// Depth samples over the water column.
    pub n_depth: usize,
}

impl Default for PulseSettings {
    fn default() -> Self {
        Self {
            window: None,
            n_freq: None,
            n_time: 2048,
            n_depth: 201,
        }
    }
}

/// Spectrum, frequency grid and time axis of one pulse experiment.
#[derive(Debug, Clone)]
pub struct PulseSetup {
    pub spectrum: SignalSpectrum,
    pub spectral: SpectralGrid,
    pub times: Vec<f64>,
}

pub fn pulse_setup(
    env: &EnvironmentModel,
    z_s: f64,
    r: f64,
    f_c: f64,
    settings: &PulseSettings,
) -> Result<PulseSetup> {
    let spectrum = SignalSpectrum::from_center_hz(f_c)?;
    let (t0, t1) = match settings.window {
        Some(w) => w,
        None => arrival_window(env, z_s, r, &spectrum)?,
    };
    let n_freq = settings
        .n_freq
        .unwrap_or_else(|| frequency_count_for_window(&spectrum, t1 - t0, 512));
    let spectral = SpectralGrid::new(&spectrum, n_freq)?;
    spectral.check_span(t1 - t0)?;
    let times = time_axis(t0, t1, settings.n_time)?;
    Ok(PulseSetup {
        spectrum,
        spectral,
        times,
    })
}

/// Pulse arrival pattern at `settings.n_depth` depths over the water column.
pub fn pulse_in_water_column(
    env: &EnvironmentModel,
    options: ModeSolverOptions,
    z_s: f64,
    r: f64,
    f_c: f64,
    settings: &PulseSettings,
) -> Result<PulseField> {
    let setup = pulse_setup(env, z_s, r, f_c, settings)?;
    let depths = water_column_depths(env.water_depth, settings.n_depth);
    let components = pulse_components(env, z_s, r, &setup.spectral, &depths, options)?;
    let values = setup.spectral.synthesize(&components, &setup.times, depths.len())?;
    let pulse = PulseField::new(setup.times, depths, values)?;
    pulse.check_window()?;
    Ok(pulse)
}

/// `n` equispaced depths over `[0, h]`.
pub fn water_column_depths(h: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| h * k as f64 / (n - 1) as f64).collect()
}

/// Pulse fidelity versus hydrophone spacing.
#[derive(Debug, Clone)]
pub struct SpacingSweep {
    pub env: EnvironmentModel,
    pub options: ModeSolverOptions,
    pub source_depth: f64,
    pub range: f64,
    pub spacings: Vec<f64>,
    pub centre_frequencies: Vec<f64>,
    pub pulse: PulseSettings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingRecord {
    pub spacing: f64,
    pub f_c: f64,
    pub j_max: usize,
    pub l_eff: f64,
    pub hydrophones: usize,
    pub fidelity: f64,
}

impl SpacingSweep {
    /// Each spacing gets a basis on its fictitious depth; the exact pulse
    /// and the array samples come from one synthesis, and every time slice
    /// of the array pulse is reconstructed.
    pub fn run(&self) -> Result<Vec<SpacingRecord>> {
        let h = self.env.water_depth;
        let bases = self
            .spacings
            .iter()
            .map(|&dz| basis_for_spacing(dz, &self.env))
            .collect::<Result<Vec<_>>>()?;
        let arrays = bases
            .iter()
            .map(|b| ArraySpec::for_basis(b, h))
            .collect::<Result<Vec<_>>>()?;
        let eval_depths = water_column_depths(h, self.pulse.n_depth);
        let mut all_depths = eval_depths.clone();
        let mut offsets = Vec::with_capacity(arrays.len());
        for a in &arrays {
            offsets.push(all_depths.len());
            all_depths.extend(a.depths());
        }
        let mut out = Vec::new();
        for &f_c in &self.centre_frequencies {
            let setup = pulse_setup(&self.env, self.source_depth, self.range, f_c, &self.pulse)?;
            let components = pulse_components(
                &self.env,
                self.source_depth,
                self.range,
                &setup.spectral,
                &all_depths,
                self.options,
            )?;
            let values = setup
                .spectral
                .synthesize(&components, &setup.times, all_depths.len())?;
            let nd = all_depths.len();
            let columns = |start: usize, count: usize| -> Vec<Complex64> {
                setup
                    .times
                    .iter()
                    .enumerate()
                    .flat_map(|(t, _)| values[t * nd + start..t * nd + start + count].iter().copied())
                    .collect()
            };
            let exact = PulseField::new(setup.times.clone(), eval_depths.clone(), columns(0, eval_depths.len()))?;
            exact.check_window()?;
            let records = bases
                .par_iter()
                .zip(&arrays)
                .zip(&offsets)
                .map(|((basis, array), &offset)| {
                    let samples = columns(offset, array.count());
                    let est = reconstruct_pulse(basis, &samples, array.count(), &setup.times, &eval_depths)?;
                    let fidelity = fidelity_pulse(&exact, &est, h)?.value;
                    Ok(SpacingRecord {
                        spacing: basis.spacing(),
                        f_c,
                        j_max: basis.j_max(),
                        l_eff: basis.l_eff(),
                        hydrophones: array.count(),
                        fidelity,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.extend(records);
        }
        Ok(out)
    }
}

/// Reconstructs every time slice of an array pulse (row-major
/// `(time, hydrophone)`) at `depths`.
pub fn reconstruct_pulse(
    basis: &DvrBasis,
    samples: &[Complex64],
    n_samples: usize,
    times: &[f64],
    depths: &[f64],
) -> Result<PulseField> {
    if samples.len() != times.len() * n_samples {
        return Err(Error::Dimension(format!(
            "{} samples for {} times and {n_samples} hydrophones",
            samples.len(),
            times.len()
        )));
    }
    let m = basis.interpolation_matrix(depths, n_samples)?;
    let mut values = Vec::with_capacity(times.len() * depths.len());
    for t in 0..times.len() {
        let row = &samples[t * n_samples..(t + 1) * n_samples];
        for weights in &m {
            values.push(weights.iter().zip(row).map(|(w, s)| s * *w).sum());
        }
    }
    PulseField::new(times.to_vec(), depths.to_vec(), values)
}

pub fn write_spacing_csv<W: Write>(records: &[SpacingRecord], mut out: W) -> Result<()> {
    writeln!(out, "dz_m,f_c_hz,j_max,l_eff_m,J,F")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.spacing, r.f_c, r.j_max, r.l_eff, r.hydrophones, r.fidelity
        )?;
    }
    Ok(())
}

/// Exact profile against noiseless, single-realization and averaged
/// reconstructions on the field grid over the water column.
#[derive(Debug, Clone)]
pub struct ProfileComparison {
    pub depths: Vec<f64>,
    pub exact: Vec<Complex64>,
    pub noiseless: Vec<Complex64>,
    pub single: Vec<Complex64>,
    pub averaged: Vec<Complex64>,
    pub f_noiseless: f64,
    pub f_single: f64,
    pub f_averaged: f64,
}

pub fn profile_compare(
    field: &CwField,
    basis: &DvrBasis,
    h: f64,
    perturbation: &Perturbation,
    seed: u64,
) -> Result<ProfileComparison> {
    let array = ArraySpec::for_basis(basis, h)?;
    let clean = sample_field(field, &array)?;
    let (noiseless, f_noiseless) = reconstruct_and_score(field, basis, &clean, h)?;
    let trial = noisy_trial(field, basis, h, perturbation, seed)?;
    let n = field.grid.count_up_to(h);
    let depths: Vec<f64> = (0..n).map(|i| field.grid.z(i)).collect();
    Ok(ProfileComparison {
        exact: field.profile[..n].to_vec(),
        noiseless: noiseless.eval_on(&depths),
        single: trial.single.eval_on(&depths),
        averaged: trial.averaged.eval_on(&depths),
        depths,
        f_noiseless,
        f_single: trial.f_single,
        f_averaged: trial.f_averaged,
    })
}

impl ProfileComparison {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z_m,re_exact,re_noiseless,re_single,re_averaged")?;
        for (k, z) in self.depths.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                z, self.exact[k].re, self.noiseless[k].re, self.single[k].re, self.averaged[k].re
            )?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "f_noiseless = {}", self.f_noiseless)?;
        writeln!(out, "f_single = {}", self.f_single)?;
        writeln!(out, "f_averaged = {}", self.f_averaged)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloRecord {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub realized_snr_db: f64,
    pub f_single: f64,
    pub f_averaged: f64,
}

/// Independent trials per perturbation; trial `k` uses the seed derived
/// from `(seed, snr, k)`.
pub fn monte_carlo(
    field: &CwField,
    basis: &DvrBasis,
    h: f64,
    perturbations: &[Perturbation],
    trials: usize,
    seed: u64,
) -> Result<Vec<MonteCarloRecord>> {
    let jobs: Vec<(Perturbation, usize)> = perturbations
        .iter()
        .flat_map(|p| (0..trials).map(move |k| (*p, k)))
        .collect();
    jobs.par_iter()
        .map(|(p, k)| {
            let trial_seed = derive_seed(seed, &[p.snr_db.to_bits(), *k as u64]);
            let t = noisy_trial(field, basis, h, p, trial_seed)?;
            Ok(MonteCarloRecord {
                trial: *k,
                seed: trial_seed,
                snr_db: p.snr_db,
                realized_snr_db: t.realized_snr_db,
                f_single: t.f_single,
                f_averaged: t.f_averaged,
            })
        })
        .collect()
}

pub fn write_monte_carlo_csv<W: Write>(records: &[MonteCarloRecord], mut out: W) -> Result<()> {
    writeln!(out, "trial,seed,snr_db,realized_snr_db,F_single,F_averaged")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial, r.seed, r.snr_db, r.realized_snr_db, r.f_single, r.f_averaged
        )?;
    }
    Ok(())
}

/// Median of the finite values; `NaN` when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
