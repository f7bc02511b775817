//! CW fields from the far-field modal sum and broadband pulses by Fourier
//! synthesis over CW solutions.

use std::f64::consts::PI;
use std::io::Write;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::grid::DepthGrid;
use crate::modes::{solve_modes, solve_modes_with, ModeSet, ModeSolverOptions};

/// Complex pressure profile at one range and frequency.
#[derive(Debug, Clone)]
pub struct CwField {
    pub frequency: f64,
    pub range: f64,
    pub source_depth: f64,
    pub grid: DepthGrid,
    pub profile: Vec<Complex64>,
    /// Set when the mode set was empty and the profile is identically zero.
    pub empty_spectrum: bool,
}

impl CwField {
    /// Linearly interpolated value at `z`.
    pub fn value_at(&self, z: f64) -> Result<Complex64> {
        self.grid.interpolate(&self.profile, z)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z_m,re_psi,im_psi")?;
        for (i, v) in self.profile.iter().enumerate() {
            writeln!(out, "{},{},{}", self.grid.z(i), v.re, v.im)?;
        }
        Ok(())
    }
}

fn check_geometry(env: &EnvironmentModel, z_s: f64, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("range must be positive, got {r}")));
    }
    if !(z_s > 0.0 && z_s < env.water_depth) {
        return Err(Error::Domain(format!(
            "source depth {z_s} outside (0, {})",
            env.water_depth
        )));
    }
    Ok(())
}

/// Per-mode complex weights `C k^{-1/2} e^{i(k + iα)r} ψ_m(z_s)` of the modal sum.
fn modal_weights(modes: &ModeSet, z_s: f64, r: f64) -> Vec<Complex64> {
    let prefactor = Complex64::i() / (2.0 * (2.0 * PI * r).sqrt()) * Complex64::from_polar(1.0, -PI / 4.0);
    modes
        .wavenumbers()
        .iter()
        .zip(modes.attenuations())
        .enumerate()
        .map(|(m, (&k, &alpha))| {
            let propagation = Complex64::from_polar((-alpha * r).exp(), k * r);
            prefactor * propagation * (modes.value_at(m, z_s) / k.sqrt())
        })
        .collect()
}

/// Modal sum evaluated at arbitrary depths (mode shapes interpolated
/// linearly from the mode grid).
pub fn cw_profile_at(
    env: &EnvironmentModel,
    modes: &ModeSet,
    z_s: f64,
    r: f64,
    depths: &[f64],
) -> Result<Vec<Complex64>> {
    check_geometry(env, z_s, r)?;
    let weights = modal_weights(modes, z_s, r);
    let zmax = modes.grid().z_max();
    depths
        .iter()
        .map(|&z| {
            if !(z >= 0.0 && z <= zmax * (1.0 + 1e-12)) {
                return Err(Error::Domain(format!("depth {z} outside [0, {zmax}]")));
            }
            Ok(weights
                .iter()
                .enumerate()
                .map(|(m, w)| w * modes.value_at(m, z))
                .sum())
        })
        .collect()
}

/// `Ψ(r, z) = i/(2 sqrt(2πr)) e^{-iπ/4} Σ_m k_m^{-1/2} e^{i(k_m + iα_m) r} ψ_m(z_s) ψ_m(z)`.
pub fn cw_field(
    env: &EnvironmentModel,
    modes: &ModeSet,
    z_s: f64,
    r: f64,
    grid: &DepthGrid,
) -> Result<CwField> {
    check_geometry(env, z_s, r)?;
    if grid.z_max() > modes.grid().z_max() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "output grid extends to {} beyond the mode grid {}",
            grid.z_max(),
            modes.grid().z_max()
        )));
    }
    if modes.is_empty() {
        warn!("no propagating modes at {} Hz; field is zero", modes.frequency());
    }
    let profile = if grid == modes.grid() {
        let weights = modal_weights(modes, z_s, r);
        let mut profile = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        for (m, w) in weights.iter().enumerate() {
            for (p, s) in profile.iter_mut().zip(modes.shape(m)) {
                *p += w * s;
            }
        }
        profile
    } else {
        cw_profile_at(env, modes, z_s, r, &grid.points())?
    };
    Ok(CwField {
        frequency: modes.frequency(),
        range: r,
        source_depth: z_s,
        grid: *grid,
        profile,
        empty_spectrum: modes.is_empty(),
    })
}

/// Gaussian source spectrum `s(Ω) = T/sqrt(2π) exp(-(Ω − Ω_c)² T² / 2)`
/// with `T = sqrt(2π)/ΔΩ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpectrum {
    pub omega_c: f64,
    pub duration: f64,
    pub delta_omega: f64,
}

impl SignalSpectrum {
    /// Bandwidth equal to half the centre frequency.
    pub fn gaussian(omega_c: f64) -> Result<Self> {
        Self::with_bandwidth(omega_c, 0.5 * omega_c)
    }

    pub fn with_bandwidth(omega_c: f64, delta_omega: f64) -> Result<Self> {
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::Domain(format!("centre frequency must be positive, got {omega_c}")));
        }
        if !(delta_omega > 0.0 && delta_omega.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {delta_omega}")));
        }
        Ok(Self {
            omega_c,
            duration: (2.0 * PI).sqrt() / delta_omega,
            delta_omega,
        })
    }

    pub fn from_center_hz(f_c: f64) -> Result<Self> {
        Self::gaussian(2.0 * PI * f_c)
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let t = self.duration;
        t / (2.0 * PI).sqrt() * (-(omega - self.omega_c).powi(2) * t * t / 2.0).exp()
    }

    /// Synthesis band `Ω_c ± 4ΔΩ`, clipped below at `0.01 Ω_c`.
    pub fn band(&self) -> (f64, f64) {
        (
            (self.omega_c - 4.0 * self.delta_omega).max(0.01 * self.omega_c),
            self.omega_c + 4.0 * self.delta_omega,
        )
    }
}

/// Uniform frequency grid with trapezoid weights premultiplied by `s(Ω)`.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    omegas: Vec<f64>,
    weights: Vec<f64>,
}

/// Components below this fraction of the spectral peak are not computed.
const NEGLIGIBLE_SPECTRUM: f64 = 1e-8;

impl SpectralGrid {
    pub fn new(spectrum: &SignalSpectrum, n_freq: usize) -> Result<Self> {
        if n_freq < 64 {
            return Err(Error::Config(format!("need at least 64 frequencies, got {n_freq}")));
        }
        let (lo, hi) = spectrum.band();
        let step = (hi - lo) / (n_freq - 1) as f64;
        let omegas: Vec<f64> = (0..n_freq).map(|k| lo + k as f64 * step).collect();
        let weights = omegas
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let end = if k == 0 || k + 1 == n_freq { 0.5 } else { 1.0 };
                end * step * spectrum.eval(w)
            })
            .collect();
        Ok(Self { omegas, weights })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| w / (2.0 * PI)).collect()
    }

    /// `w_k s(Ω_k)` for each component.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether component `k` carries non-negligible spectral weight.
    pub fn is_significant(&self, k: usize) -> bool {
        let peak = self.weights.iter().fold(0.0f64, |a, &b| a.max(b));
        self.weights[k] > NEGLIGIBLE_SPECTRUM * peak
    }

    /// Period `2π/δΩ` of the discrete synthesis in time.
    pub fn period(&self) -> f64 {
        2.0 * PI / (self.omegas[1] - self.omegas[0])
    }

    /// A time window must be shorter than the synthesis period.
    pub fn check_span(&self, span: f64) -> Result<()> {
        if span >= self.period() {
            return Err(Error::Window(format!(
                "window of {span} s exceeds the synthesis period {} s; increase n_freq",
                self.period()
            )));
        }
        Ok(())
    }

    /// `Σ_k w_k s(Ω_k) Ψ_k(z) e^{-iΩ_k t}` for every time, row-major
    /// `(time, depth)`. `components[k]` holds `Ψ_k` at the output depths;
    /// an empty vector marks a skipped component.
    pub fn synthesize(&self, components: &[Vec<Complex64>], times: &[f64], n_depth: usize) -> Result<Vec<Complex64>> {
        if components.len() != self.omegas.len() {
            return Err(Error::Dimension(format!(
                "{} components for {} frequencies",
                components.len(),
                self.omegas.len()
            )));
        }
        let active: Vec<usize> = (0..components.len())
            .filter(|&k| !components[k].is_empty())
            .collect();
        for &k in &active {
            if components[k].len() != n_depth {
                return Err(Error::Dimension(format!(
                    "component {k} has {} depths, expected {n_depth}",
                    components[k].len()
                )));
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); times.len() * n_depth];
        out.par_chunks_mut(n_depth.max(1))
            .zip(times.par_iter())
            .for_each(|(row, &t)| {
                for &k in &active {
                    let c = Complex64::from_polar(self.weights[k], -self.omegas[k] * t);
                    for (o, v) in row.iter_mut().zip(&components[k]) {
                        *o += c * v;
                    }
                }
            });
        Ok(out)
    }
}

/// Complex time–depth arrival pattern, row-major `(time, depth)`.
#[derive(Debug, Clone)]
pub struct PulseField {
    pub times: Vec<f64>,
    pub depths: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl PulseField {
    pub fn new(times: Vec<f64>, depths: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !ascending(&times) || !ascending(&depths) {
            return Err(Error::Dimension("pulse axes must be strictly increasing".into()));
        }
        if values.len() != times.len() * depths.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} pulse",
                values.len(),
                times.len(),
                depths.len()
            )));
        }
        Ok(Self { times, depths, values })
    }

    pub fn at(&self, t: usize, z: usize) -> Complex64 {
        self.values[t * self.depths.len() + z]
    }

    pub fn row(&self, t: usize) -> &[Complex64] {
        let n = self.depths.len();
        &self.values[t * n..(t + 1) * n]
    }

    /// Rows of `(t, z, Re Ψ, Im Ψ)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_s,z_m,re_psi,im_psi")?;
        for (ti, t) in self.times.iter().enumerate() {
            for (zi, z) in self.depths.iter().enumerate() {
                let v = self.at(ti, zi);
                writeln!(out, "{},{},{},{}", t, z, v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Errors if more than `1e-3` of the peak intensity sits in the first or
    /// last 2% of the time window.
    pub fn check_window(&self) -> Result<()> {
        let nt = self.times.len();
        let edge = (nt / 50).max(1);
        let intensity = |t: usize| self.row(t).iter().map(|v| v.norm_sqr()).fold(0.0f64, f64::max);
        let peak = (0..nt).map(intensity).fold(0.0f64, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        let edge_peak = (0..edge)
            .chain(nt - edge..nt)
            .map(intensity)
            .fold(0.0f64, f64::max);
        if edge_peak > 1e-3 * peak {
            return Err(Error::Window(format!(
                "{:.2e} of the peak intensity at the window edges [{}, {}] s",
                edge_peak / peak,
                self.times[0],
                self.times[nt - 1]
            )));
        }
        Ok(())
    }
}

/// Uniform time axis with `n_time` samples over `[t0, t1]`.
pub fn time_axis(t0: f64, t1: f64, n_time: usize) -> Result<Vec<f64>> {
    if !(t1 > t0) || n_time < 2 {
        return Err(Error::Config(format!(
            "time window [{t0}, {t1}] with {n_time} samples is empty"
        )));
    }
    let dt = (t1 - t0) / (n_time - 1) as f64;
    Ok((0..n_time).map(|k| t0 + k as f64 * dt).collect())
}

/// CW components at `depths` for every significant frequency of `grid`.
/// Modes are re-solved per frequency on the default grid.
pub fn pulse_components(
    env: &EnvironmentModel,
    z_s: f64,
    r: f64,
    spectral: &SpectralGrid,
    depths: &[f64],
    options: ModeSolverOptions,
) -> Result<Vec<Vec<Complex64>>> {
    check_geometry(env, z_s, r)?;
    let freqs = spectral.frequencies_hz();
    (0..freqs.len())
        .into_par_iter()
        .map(|k| {
            if !spectral.is_significant(k) {
                return Ok(Vec::new());
            }
            let grid = DepthGrid::for_environment(env, freqs[k])?;
            let modes = solve_modes_with(env, freqs[k], &grid, options)?;
            cw_profile_at(env, &modes, z_s, r, depths)
        })
        .collect()
}

/// Pulse arrival pattern on `grid` over the time window.
#[allow(clippy::too_many_arguments)]
pub fn pulse_field(
    env: &EnvironmentModel,
    z_s: f64,
    r: f64,
    grid: &DepthGrid,
    spectrum: &SignalSpectrum,
    time_window: (f64, f64),
    n_freq: usize,
    n_time: usize,
) -> Result<PulseField> {
    pulse_field_with(env, z_s, r, grid, spectrum, time_window, n_freq, n_time, ModeSolverOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn pulse_field_with(
    env: &EnvironmentModel,
    z_s: f64,
    r: f64,
    grid: &DepthGrid,
    spectrum: &SignalSpectrum,
    time_window: (f64, f64),
    n_freq: usize,
    n_time: usize,
    options: ModeSolverOptions,
) -> Result<PulseField> {
    let spectral = SpectralGrid::new(spectrum, n_freq)?;
    let times = time_axis(time_window.0, time_window.1, n_time)?;
    spectral.check_span(time_window.1 - time_window.0)?;
    let depths = grid.points();
    let components = pulse_components(env, z_s, r, &spectral, &depths, options)?;
    let values = spectral.synthesize(&components, &times, depths.len())?;
    let pulse = PulseField::new(times, depths, values)?;
    pulse.check_window()?;
    Ok(pulse)
}

/// Smallest frequency count, at least `min_count`, whose synthesis period
/// exceeds the window span by a quarter.
pub fn frequency_count_for_window(spectrum: &SignalSpectrum, span: f64, min_count: usize) -> usize {
    let (lo, hi) = spectrum.band();
    let needed = (1.25 * span * (hi - lo) / (2.0 * PI)).ceil() as usize + 1;
    needed.max(min_count).max(64)
}

/// Modes whose arrival amplitude is below this fraction of the strongest
/// are ignored when sizing the arrival window.
const NEGLIGIBLE_ARRIVAL: f64 = 1e-3;

/// Arrival-time window `[r/v_max, r/v_min]` over the trapped modes that
/// reach range `r` with non-negligible amplitude across the significant
/// band, padded by a few pulse durations. The slow, dispersive tail of
/// sediment modes is left to `check_window`; at short range it can exceed
/// the edge tolerance, and an explicit window is then needed.
pub fn arrival_window(env: &EnvironmentModel, z_s: f64, r: f64, spectrum: &SignalSpectrum) -> Result<(f64, f64)> {
    check_geometry(env, z_s, r)?;
    let (lo, hi) = (
        (spectrum.omega_c - 2.5 * spectrum.delta_omega).max(0.05 * spectrum.omega_c),
        spectrum.omega_c + 2.5 * spectrum.delta_omega,
    );
    let probes: Vec<f64> = (0..12)
        .map(|k| (lo + (hi - lo) * k as f64 / 11.0) / (2.0 * PI))
        .collect();
    let speeds: Vec<(f64, f64)> = probes
        .par_iter()
        .map(|&f| group_speed_bounds(env, f, z_s, r))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let v_max = speeds.iter().map(|s| s.1).fold(env.c_min(), f64::max);
    let v_min = speeds.iter().map(|s| s.0).fold(env.c_min(), f64::min);
    let pad = 4.0 * spectrum.duration + 0.02 * r / env.c_min();
    Ok(((r / v_max - pad).max(0.0), r / v_min + pad))
}

/// Group-speed range of the trapped modes whose amplitude
/// `|ψ(z_s)| max_water |ψ| e^{-αr} / sqrt(k)` is significant.
fn group_speed_bounds(env: &EnvironmentModel, f: f64, z_s: f64, r: f64) -> Result<Option<(f64, f64)>> {
    let grid = DepthGrid::for_environment(env, f)?;
    let modes = solve_modes(env, f, &grid)?;
    let n_water = grid.count_up_to(env.water_depth);
    let amplitude: Vec<f64> = (0..modes.mode_count())
        .map(|m| {
            let peak = modes.shape(m)[..n_water].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            modes.value_at(m, z_s).abs() * peak * (-modes.attenuations()[m] * r).exp() / modes.wavenumbers()[m].sqrt()
        })
        .collect();
    let k_b = 2.0 * PI * f / env.c_b;
    let trapped: Vec<usize> = (0..modes.mode_count()).filter(|&m| modes.wavenumbers()[m] > k_b).collect();
    let strongest = trapped.iter().map(|&m| amplitude[m]).fold(0.0, f64::max);
    let alive: Vec<f64> = trapped
        .into_iter()
        .filter(|&m| amplitude[m] >= NEGLIGIBLE_ARRIVAL * strongest)
        .map(|m| modes.group_speeds()[m])
        .collect();
    if alive.is_empty() {
        return Ok(None);
    }
    Ok(Some((
        alive.iter().copied().fold(f64::INFINITY, f64::min),
        alive.iter().copied().fold(0.0, f64::max),
    )))
}
