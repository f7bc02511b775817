//! Normal modes of the range-independent waveguide.
//!
//! The depth problem `ρ (ψ'/ρ)' + (ω²/c² − k_r²) ψ = 0` with `ψ(0) = 0` and
//! `ψ'(L) = 0` is discretized with second-order finite differences in flux
//! form. Node masses are the integrals of `1/ρ` over each dual cell, so the
//! discrete operator is symmetric in the `1/ρ`-weighted inner product and the
//! density jump enters only through the cell coefficients. Eigenvalues are
//! refined by Richardson extrapolation against the grid with twice the
//! spacing; sediment losses are added by first-order perturbation.

use std::f64::consts::PI;
use std::io::Write;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::env::EnvironmentModel;
use crate::error::{Error, Result};
use crate::grid::DepthGrid;
use crate::linalg::SymTridiagonal;

/// Which part of the discrete spectrum to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeFilter {
    /// Phase speed below the sediment speed, `k_r > ω / c_b`.
    Trapped,
    /// Every discrete mode with `k_r² > 0`.
    #[default]
    Propagating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolverOptions {
    pub filter: ModeFilter,
    pub richardson: bool,
}

impl Default for ModeSolverOptions {
    fn default() -> Self {
        Self {
            filter: ModeFilter::Propagating,
            richardson: true,
        }
    }
}

/// Modes of one frequency, sampled on a depth grid and normalized so that
/// `∫ ψ_m² / ρ dz = 1`.
#[derive(Debug, Clone)]
pub struct ModeSet {
    frequency: f64,
    grid: DepthGrid,
    k_rm: Vec<f64>,
    alpha_m: Vec<f64>,
    v_g: Vec<f64>,
    psi: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ModeSet {
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn grid(&self) -> &DepthGrid {
        &self.grid
    }

    pub fn mode_count(&self) -> usize {
        self.k_rm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_rm.is_empty()
    }

    /// Horizontal wavenumbers in rad/m, descending.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k_rm
    }

    /// Modal attenuation rates in nepers/m.
    pub fn attenuations(&self) -> &[f64] {
        &self.alpha_m
    }

    /// Group speeds in m/s from `dk/dω = (ω/k) ∫ ψ² / (ρ c²) dz`.
    pub fn group_speeds(&self) -> &[f64] {
        &self.v_g
    }

    /// Mode shape `m` (zero-based) on the grid nodes.
    pub fn shape(&self, m: usize) -> &[f64] {
        &self.psi[m]
    }

    /// Trapezoid weights of the `1/ρ` inner product, one per node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mode `m` at depth `z` by linear interpolation.
    pub fn value_at(&self, m: usize, z: f64) -> f64 {
        crate::grid::interpolate_uniform(&self.psi[m], self.grid.spacing(), z)
    }

    /// Keeps only the listed modes (zero-based, any order).
    pub fn subset(&self, modes: &[usize]) -> ModeSet {
        ModeSet {
            frequency: self.frequency,
            grid: self.grid,
            k_rm: modes.iter().map(|&m| self.k_rm[m]).collect(),
            alpha_m: modes.iter().map(|&m| self.alpha_m[m]).collect(),
            v_g: modes.iter().map(|&m| self.v_g[m]).collect(),
            psi: modes.iter().map(|&m| self.psi[m].clone()).collect(),
            weights: self.weights.clone(),
        }
    }

    /// `G_mn = ∫ ψ_m ψ_n / ρ dz`.
    pub fn gram_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.mode_count();
        let mut g = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in a..m {
                let v: f64 = self.psi[a]
                    .iter()
                    .zip(&self.psi[b])
                    .zip(&self.weights)
                    .map(|((x, y), w)| x * y * w)
                    .sum();
                g[a][b] = v;
                g[b][a] = v;
            }
        }
        g
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,k_rm_rad_per_m,alpha_m_np_per_m")?;
        for (m, (k, a)) in self.k_rm.iter().zip(&self.alpha_m).enumerate() {
            writeln!(out, "{},{},{}", m + 1, k, a)?;
        }
        Ok(())
    }

    pub fn write_shapes_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "z_m")?;
        for m in 0..self.mode_count() {
            write!(out, ",psi_{}", m + 1)?;
        }
        writeln!(out)?;
        for i in 0..self.grid.n_points() {
            write!(out, "{}", self.grid.z(i))?;
            for psi in &self.psi {
                write!(out, ",{}", psi[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Finite-difference operator assembled on one grid.
struct Discretization {
    spacing: f64,
    /// `1/ρ` integrated over each node's dual cell, divided by the spacing.
    mass: Vec<f64>,
    /// `ω²/(c² ρ)` integrated over each dual cell, divided by the spacing.
    potential: Vec<f64>,
    /// `Im(n²)/ρ` integrated over each dual cell, divided by the spacing.
    loss: Vec<f64>,
    /// Cell coefficients `1/⟨ρ⟩`, harmonic mean of `1/ρ` over each cell.
    flux: Vec<f64>,
}

impl Discretization {
    fn assemble(env: &EnvironmentModel, f: f64, grid: &DepthGrid) -> Self {
        let n = grid.n_points();
        let d = grid.spacing();
        let big_l = grid.z_max();
        let h = env.water_depth;
        let omega = 2.0 * PI * f;
        let sediment_loss = env.sediment_loss(f);
        let split = |a: f64, b: f64| -> Vec<(f64, f64)> {
            let tiny = 1e-12 * d;
            if h - a > tiny && b - h > tiny {
                vec![(a, h), (h, b)]
            } else {
                vec![(a, b)]
            }
        };

        let mut mass = vec![0.0; n];
        let mut potential = vec![0.0; n];
        let mut loss = vec![0.0; n];
        for i in 0..n {
            let z = grid.z(i);
            let lo = (z - 0.5 * d).max(0.0);
            let hi = (z + 0.5 * d).min(big_l);
            for (a, b) in split(lo, hi) {
                let len = b - a;
                let mid = 0.5 * (a + b);
                let rho = env.density_unchecked(mid);
                let c = env.sound_speed_unchecked(mid);
                mass[i] += len / rho;
                potential[i] += len * (omega / c).powi(2) / rho;
                if mid >= h {
                    loss[i] += len * sediment_loss / rho;
                }
            }
            mass[i] /= d;
            potential[i] /= d;
            loss[i] /= d;
        }

        let flux = (0..n - 1)
            .map(|c| {
                let a = grid.z(c);
                let b = grid.z(c + 1);
                let mean_rho: f64 = split(a, b)
                    .into_iter()
                    .map(|(x, y)| (y - x) * env.density_unchecked(0.5 * (x + y)))
                    .sum::<f64>()
                    / (b - a);
                1.0 / mean_rho
            })
            .collect();

        Self {
            spacing: d,
            mass,
            potential,
            loss,
            flux,
        }
    }

    /// Symmetrized operator `M^{-1/2} A M^{-1/2}` over the unknowns `1..n`.
    fn operator(&self) -> Result<SymTridiagonal> {
        let n = self.mass.len();
        let d2 = self.spacing * self.spacing;
        let diag = (1..n)
            .map(|i| {
                let right = if i + 1 < n { self.flux[i] } else { 0.0 };
                (self.potential[i] - (self.flux[i - 1] + right) / d2) / self.mass[i]
            })
            .collect();
        let off = (1..n - 1)
            .map(|i| self.flux[i] / d2 / (self.mass[i] * self.mass[i + 1]).sqrt())
            .collect();
        SymTridiagonal::new(diag, off)
    }
}

/// Solves for all propagating discrete modes with default options.
pub fn solve_modes(env: &EnvironmentModel, f: f64, grid: &DepthGrid) -> Result<ModeSet> {
    solve_modes_with(env, f, grid, ModeSolverOptions::default())
}

pub fn solve_modes_with(
    env: &EnvironmentModel,
    f: f64,
    grid: &DepthGrid,
    options: ModeSolverOptions,
) -> Result<ModeSet> {
    env.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Domain(format!("frequency must be positive, got {f}")));
    }
    if (grid.z_max() - env.basement_depth).abs() > 1e-9 * env.basement_depth {
        return Err(Error::Domain(format!(
            "grid extent {} differs from basement depth {}",
            grid.z_max(),
            env.basement_depth
        )));
    }
    let omega = 2.0 * PI * f;
    let k_max = omega / env.c_min();
    let threshold = match options.filter {
        ModeFilter::Trapped => (omega / env.c_b).powi(2),
        ModeFilter::Propagating => 0.0,
    };
    let gamma_max = (k_max * k_max - threshold).max(0.0).sqrt();
    if gamma_max > 0.0 {
        let points_per_wavelength = 2.0 * PI / gamma_max / grid.spacing();
        if points_per_wavelength < 8.0 {
            return Err(Error::Resolution(format!(
                "{points_per_wavelength:.2} points per vertical wavelength at {f} Hz, need 8"
            )));
        }
    }

    let fine = Discretization::assemble(env, f, grid);
    let op = fine.operator()?;
    let lambdas = op.eigenvalues_above(threshold);

    let mut k_sq = lambdas.clone();
    if options.richardson && !lambdas.is_empty() {
        match coarse_grid(env, grid) {
            Some(half) => {
                let mut all = lambdas.clone();
                if lambdas.len() < op.len() {
                    all.push(op.eigenvalue(op.len() - 1 - lambdas.len()));
                }
                let coarse = paired_eigenvalues(env, f, &half, &all)?;
                // A second halving removes the Δ⁴ term as well, where the
                // three grids are in the asymptotic regime.
                let quarter = match coarse_grid(env, &half) {
                    Some(g) => {
                        let op4 = Discretization::assemble(env, f, &g).operator()?;
                        op4.largest_eigenvalues(all.len().min(op4.len()))
                    }
                    None => Vec::new(),
                };
                for r in 0..lambdas.len() {
                    let Some(l2) = coarse[r] else { continue };
                    let r1 = (4.0 * lambdas[r] - l2) / 3.0;
                    k_sq[r] = match quarter.get(r) {
                        Some(&l4) if ((l2 - l4) / (lambdas[r] - l2) - 4.0).abs() < 0.5 => {
                            (16.0 * r1 - (4.0 * l2 - l4) / 3.0) / 15.0
                        }
                        _ => r1,
                    };
                }
            }
            None => debug!("grid not suitable for Richardson extrapolation; using raw eigenvalues"),
        }
    }

    let n = grid.n_points();
    let weights: Vec<f64> = fine.mass.iter().map(|m| m * fine.spacing).collect();
    let mut k_rm = Vec::new();
    let mut alpha_m = Vec::new();
    let mut v_g = Vec::new();
    let mut psi = Vec::new();
    let mut order: Vec<usize> = (0..lambdas.len())
        .filter(|&r| k_sq[r] > threshold && k_sq[r] > 0.0)
        .collect();
    order.sort_by(|&a, &b| k_sq[b].total_cmp(&k_sq[a]));
    for r in order {
        let lambda = lambdas[r];
        let k = k_sq[r].sqrt();
        if !k.is_finite() {
            return Err(Error::Consistency(format!("non-finite wavenumber for mode {}", r + 1)));
        }
        let y = op.eigenvector(lambda);
        let mut shape = vec![0.0; n];
        for i in 1..n {
            shape[i] = y[i - 1] / weights[i].sqrt();
        }
        if let Some(first) = shape.iter().find(|v| v.abs() > 1e-300) {
            if *first < 0.0 {
                shape.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let alpha = perturbative_attenuation(&fine, &shape, k, f, env)?;
        // Loss exceeding the wavenumber leaves the first-order theory; such
        // a mode sits at cutoff and is evanescent in range.
        if alpha >= k {
            debug!("dropping mode {} at {f} Hz: k = {k:e}, alpha = {alpha:e}", r + 1);
            continue;
        }
        let slowness_sq: f64 = shape
            .iter()
            .zip(&fine.potential)
            .map(|(p, q)| p * p * q)
            .sum::<f64>()
            * fine.spacing
            / (omega * omega);
        k_rm.push(k);
        alpha_m.push(alpha);
        v_g.push(k / (omega * slowness_sq));
        psi.push(shape);
    }

    Ok(ModeSet {
        frequency: f,
        grid: *grid,
        k_rm,
        alpha_m,
        v_g,
        psi,
        weights,
    })
}

/// Grid with twice the spacing, if the interface lands on one of its nodes
/// whenever it lands on a node of the fine grid.
fn coarse_grid(env: &EnvironmentModel, grid: &DepthGrid) -> Option<DepthGrid> {
    let cells = grid.n_points() - 1;
    if !cells.is_multiple_of(2) || cells / 2 < 2 {
        return None;
    }
    if let Some(i) = grid.node_at(env.water_depth, 1e-6) {
        if i % 2 != 0 {
            return None;
        }
    }
    DepthGrid::new(grid.z_max(), cells / 2 + 1).ok()
}

/// Eigenvalues on `grid` paired by rank with the fine-grid eigenvalues
/// `fine` (the wanted ones plus the next below). Pairs inside a
/// near-degenerate cluster, where rank pairing is unreliable, are `None`.
fn paired_eigenvalues(env: &EnvironmentModel, f: f64, grid: &DepthGrid, fine: &[f64]) -> Result<Vec<Option<f64>>> {
    let op = Discretization::assemble(env, f, grid).operator()?;
    let wanted = fine.len().min(op.len());
    let top = op.largest_eigenvalues(wanted);
    Ok((0..fine.len())
        .map(|r| {
            let lc = *top.get(r)?;
            let shift = (fine[r] - lc).abs();
            let gap_above = if r > 0 { fine[r - 1] - fine[r] } else { f64::INFINITY };
            let gap_below = fine.get(r + 1).map_or(f64::INFINITY, |next| fine[r] - next);
            (4.0 * shift < gap_above.min(gap_below)).then_some(lc)
        })
        .collect())
}

fn perturbative_attenuation(
    disc: &Discretization,
    shape: &[f64],
    k_rm: f64,
    f: f64,
    env: &EnvironmentModel,
) -> Result<f64> {
    if !(k_rm > 0.0) {
        return Err(Error::Degenerate(format!("mode with nonpositive wavenumber {k_rm}")));
    }
    let k0 = 2.0 * PI * f / env.c_min();
    let overlap: f64 = shape
        .iter()
        .zip(&disc.loss)
        .map(|(p, l)| p * p * l)
        .sum::<f64>()
        * disc.spacing;
    Ok(k0 * k0 / (2.0 * k_rm) * overlap)
}

/// First-order attenuation rate `(k0² / 2k_r) ∫ Im(n²) ψ² / ρ dz` of a
/// density-normalized mode sampled on `grid`.
pub fn modal_attenuation(
    env: &EnvironmentModel,
    grid: &DepthGrid,
    shape: &[f64],
    k_rm: f64,
    f: f64,
) -> Result<f64> {
    if shape.len() != grid.n_points() {
        return Err(Error::Dimension(format!(
            "mode has {} samples on a {}-point grid",
            shape.len(),
            grid.n_points()
        )));
    }
    let disc = Discretization::assemble(env, f, grid);
    perturbative_attenuation(&disc, shape, k_rm, f, env)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_overlap_gives_zero_attenuation() {
        let env = EnvironmentModel::default();
        let grid = DepthGrid::new(300.0, 301).unwrap();
        let shape: Vec<f64> = grid
            .points()
            .iter()
            .map(|&z| if z < 100.0 { (PI * z / 100.0).sin() } else { 0.0 })
            .collect();
        let a = modal_attenuation(&env, &grid, &shape, 1.0, 300.0).unwrap();
        assert_eq!(a, 0.0);
        assert!(modal_attenuation(&env, &grid, &shape, 0.0, 300.0).is_err());
        assert!(modal_attenuation(&env, &grid, &shape[..10], 1.0, 300.0).is_err());
    }

    #[test]
    fn attenuation_is_linear_in_loss() {
        let env = EnvironmentModel::default();
        let grid = DepthGrid::for_environment(&env, 300.0).unwrap();
        let modes = solve_modes(&env, 300.0, &grid).unwrap();
        let mut doubled = env;
        doubled.att_coeff *= 2.0;
        for m in 0..modes.mode_count() {
            let a1 = modal_attenuation(&env, &grid, modes.shape(m), modes.wavenumbers()[m], 300.0).unwrap();
            let a2 = modal_attenuation(&doubled, &grid, modes.shape(m), modes.wavenumbers()[m], 300.0).unwrap();
            assert!((a2 - 2.0 * a1).abs() <= 1e-14 * a1.abs().max(1e-300));
            assert!((a1 - modes.attenuations()[m]).abs() <= 1e-14 * a1.max(1e-300));
        }
    }

    #[test]
    fn rejects_coarse_grid_and_bad_extent() {
        let env = EnvironmentModel::default();
        let grid = DepthGrid::new(300.0, 101).unwrap();
        assert!(matches!(solve_modes(&env, 800.0, &grid), Err(Error::Resolution(_))));
        let grid = DepthGrid::new(200.0, 2001).unwrap();
        assert!(matches!(solve_modes(&env, 100.0, &grid), Err(Error::Domain(_))));
    }

    #[test]
    fn very_low_frequency_has_no_modes() {
        let env = EnvironmentModel::default();
        let grid = DepthGrid::for_environment(&env, 1.0).unwrap();
        let modes = solve_modes(&env, 1.0, &grid).unwrap();
        assert!(modes.is_empty());
    }

    #[test]
    fn boundary_conditions_hold() {
        let env = EnvironmentModel::default();
        let grid = DepthGrid::for_environment(&env, 300.0).unwrap();
        let modes = solve_modes(&env, 300.0, &grid).unwrap();
        let n = grid.n_points();
        let d = grid.spacing();
        for m in 0..modes.mode_count() {
            let psi = modes.shape(m);
            assert_eq!(psi[0], 0.0);
            let max = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let slope = (psi[n - 1] - psi[n - 2]) / d;
            // Backward difference: slope ≈ ψ'(L) - (d/2) ψ''(L) = (d/2) γ² ψ(L).
            let k = modes.wavenumbers()[m];
            let gamma_sq = (2.0 * PI * 300.0 / env.c_b).powi(2) - k * k;
            let expected = 0.5 * d * gamma_sq * psi[n - 1];
            let scale = gamma_sq.abs().sqrt() * max;
            assert!((slope - expected).abs() < 1e-2 * scale, "mode {m}: slope {slope} vs {expected}");
        }
    }
}
