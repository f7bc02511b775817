//! Discrete variable representation on `[0, L]` with a pressure-release top
//! and a rigid bottom.
//!
//! The auxiliary basis is `φ_i(z) = sqrt(2/L) sin((2i − 1)πz / 2L)`. The
//! matrix of `cos(πz/L)` in that basis is tridiagonal; its eigenvectors give
//! cardinal functions `χ_j = Σ_i V_ij φ_i` pinned to equispaced depths
//! `z_j = j Δz`, `Δz = L / (j_max + 1/2)`, with `χ_j(z_i) sqrt(Δz) = δ_ij`.
//!
//! Indices `i` and `j` are one-based throughout this module, matching the
//! depth labels `z_j = j Δz`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq)]
pub struct DvrBasis {
    j_max: usize,
    l_eff: f64,
    dz: f64,
    /// Eigenvalues `f_j` of the position matrix, descending.
    eigenvalues: Vec<f64>,
    depths: Vec<f64>,
    /// `V_ij` stored row-major: `eigvecs[(i-1) * j_max + (j-1)]`.
    eigvecs: Vec<f64>,
}

fn check_args(j_max: usize, l_eff: f64) -> Result<()> {
    if j_max == 0 {
        return Err(Error::Domain("DVR basis needs j_max >= 1".into()));
    }
    if !(l_eff > 0.0 && l_eff.is_finite()) {
        return Err(Error::Domain(format!("DVR depth must be positive, got {l_eff}")));
    }
    Ok(())
}

/// Closed-form basis.
pub fn build_dvr(j_max: usize, l_eff: f64) -> Result<DvrBasis> {
    check_args(j_max, l_eff)?;
    let denom = j_max as f64 + 0.5;
    let theta = PI / denom;
    let dz = l_eff / denom;
    let eigenvalues = (1..=j_max).map(|j| (j as f64 * theta).cos()).collect();
    let depths = (1..=j_max).map(|j| j as f64 * dz).collect();
    let norm = (2.0 / denom).sqrt();
    let mut eigvecs = vec![0.0; j_max * j_max];
    for i in 1..=j_max {
        for j in 1..=j_max {
            eigvecs[(i - 1) * j_max + (j - 1)] = norm * ((i as f64 - 0.5) * j as f64 * theta).sin();
        }
    }
    Ok(DvrBasis {
        j_max,
        l_eff,
        dz,
        eigenvalues,
        depths,
        eigvecs,
    })
}

/// Matrix elements `Z_mn = ∫ φ_m cos(πz/L) φ_n dz` by Gauss–Legendre
/// quadrature.
pub fn position_matrix(j_max: usize, l_eff: f64) -> Result<DMatrix<f64>> {
    check_args(j_max, l_eff)?;
    let rule = GaussLegendre::new(20).composite(0.0, l_eff, j_max + 1);
    let q = rule.len();
    let mut phi = DMatrix::<f64>::zeros(q, j_max);
    let mut weighted = DMatrix::<f64>::zeros(q, j_max);
    for (k, &(z, w)) in rule.iter().enumerate() {
        let w = w * (PI * z / l_eff).cos();
        for i in 1..=j_max {
            let p = eval_phi_unchecked(i, z, l_eff);
            phi[(k, i - 1)] = p;
            weighted[(k, i - 1)] = p * w;
        }
    }
    Ok(phi.transpose() * weighted)
}

/// Basis obtained by numerically diagonalizing the position matrix.
pub fn build_dvr_numeric(j_max: usize, l_eff: f64) -> Result<DvrBasis> {
    let z = position_matrix(j_max, l_eff)?;
    for m in 0..j_max {
        for n in 0..j_max {
            if m.abs_diff(n) > 1 && z[(m, n)].abs() >= 1e-10 {
                return Err(Error::Consistency(format!(
                    "position matrix not tridiagonal: Z[{},{}] = {:e}",
                    m + 1,
                    n + 1,
                    z[(m, n)]
                )));
            }
        }
    }
    let eig = z.symmetric_eigen();
    let mut order: Vec<usize> = (0..j_max).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigvecs = vec![0.0; j_max * j_max];
    for (j, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let sign = col
            .iter()
            .find(|v| v.abs() > 1e-12)
            .map_or(1.0, |v| v.signum());
        for i in 0..j_max {
            eigvecs[i * j_max + j] = sign * col[i];
        }
    }
    let depths: Vec<f64> = eigenvalues
        .iter()
        .map(|f| l_eff / PI * f.clamp(-1.0, 1.0).acos())
        .collect();
    let dz = depths[j_max - 1] / j_max as f64;
    Ok(DvrBasis {
        j_max,
        l_eff,
        dz,
        eigenvalues,
        depths,
        eigvecs,
    })
}

/// Auxiliary harmonic `φ_i(z)`, `i >= 1`.
pub fn eval_phi(i: usize, z: f64, l_eff: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::Domain("harmonic index starts at 1".into()));
    }
    check_depth(z, l_eff)?;
    Ok(eval_phi_unchecked(i, z, l_eff))
}

#[inline]
pub(crate) fn eval_phi_unchecked(i: usize, z: f64, l_eff: f64) -> f64 {
    (2.0 / l_eff).sqrt() * ((2 * i - 1) as f64 * PI * z / (2.0 * l_eff)).sin()
}

fn check_depth(z: f64, l_eff: f64) -> Result<()> {
    let slack = 1e-9 * l_eff;
    if !(z >= -slack && z <= l_eff + slack) {
        return Err(Error::Domain(format!("depth {z} outside [0, {l_eff}]")));
    }
    Ok(())
}

impl DvrBasis {
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn l_eff(&self) -> f64 {
        self.l_eff
    }

    pub fn spacing(&self) -> f64 {
        self.dz
    }

    /// Grid depths `z_1..z_jmax`, ascending.
    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    /// Position-matrix eigenvalues `f_1..f_jmax`, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector entry `V_ij`.
    pub fn v(&self, i: usize, j: usize) -> f64 {
        self.eigvecs[(i - 1) * self.j_max + (j - 1)]
    }

    /// `χ_j(z)`; panics if `j` is outside `1..=j_max`.
    pub fn chi(&self, j: usize, z: f64) -> f64 {
        assert!((1..=self.j_max).contains(&j), "DVR index {j} outside 1..={}", self.j_max);
        (1..=self.j_max)
            .map(|i| self.v(i, j) * eval_phi_unchecked(i, z, self.l_eff))
            .sum()
    }

    /// Checked `χ_j(z)`.
    pub fn eval_chi(&self, j: usize, z: f64) -> Result<f64> {
        if !(1..=self.j_max).contains(&j) {
            return Err(Error::Domain(format!("DVR index {j} outside 1..={}", self.j_max)));
        }
        check_depth(z, self.l_eff)?;
        Ok(self.chi(j, z))
    }

    /// `M[k][j-1] = sqrt(Δz) χ_j(depths[k])` for `j = 1..=n_samples`, so that
    /// a reconstruction at `depths` is `M · samples`.
    pub fn interpolation_matrix(&self, depths: &[f64], n_samples: usize) -> Result<Vec<Vec<f64>>> {
        if n_samples > self.j_max {
            return Err(Error::Dimension(format!(
                "{n_samples} samples exceed basis size {}",
                self.j_max
            )));
        }
        let s = self.dz.sqrt();
        depths
            .iter()
            .map(|&z| {
                check_depth(z, self.l_eff)?;
                let phi: Vec<f64> = (1..=self.j_max)
                    .map(|i| eval_phi_unchecked(i, z, self.l_eff))
                    .collect();
                Ok((1..=n_samples)
                    .map(|j| {
                        s * phi
                            .iter()
                            .enumerate()
                            .map(|(i, p)| self.eigvecs[i * self.j_max + (j - 1)] * p)
                            .sum::<f64>()
                    })
                    .collect())
            })
            .collect()
    }

    /// Table of `(j, z_j, f_j)` followed by `χ_j` sampled at `n_eval` depths.
    pub fn write_csv<W: Write>(&self, mut table: W, mut curves: W, n_eval: usize) -> Result<()> {
        writeln!(table, "j,z_j_m,f_j")?;
        for j in 1..=self.j_max {
            writeln!(table, "{},{},{}", j, self.depths[j - 1], self.eigenvalues[j - 1])?;
        }
        write!(curves, "z_m")?;
        for j in 1..=self.j_max {
            write!(curves, ",chi_{j}")?;
        }
        writeln!(curves)?;
        let n_eval = n_eval.max(2);
        for k in 0..n_eval {
            let z = self.l_eff * k as f64 / (n_eval - 1) as f64;
            write!(curves, "{z}")?;
            for j in 1..=self.j_max {
                write!(curves, ",{}", self.chi(j, z))?;
            }
            writeln!(curves)?;
        }
        Ok(())
    }
}

/// Continuous profile `Σ_i a_i φ_i(z)` produced by [`reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    l_eff: f64,
    coefficients: Vec<Complex64>,
}

impl Reconstruction {
    /// Expansion coefficients over `φ_1..φ_jmax`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn eval(&self, z: f64) -> Complex64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, a)| a * eval_phi_unchecked(i + 1, z, self.l_eff))
            .sum()
    }

    pub fn eval_on(&self, depths: &[f64]) -> Vec<Complex64> {
        depths.iter().map(|&z| self.eval(z)).collect()
    }
}

/// `Ψ(z) = sqrt(Δz) Σ_{j<=J} s_j χ_j(z)` for samples `s_1..s_J` taken at
/// `z_1..z_J`. Deeper grid points contribute nothing.
pub fn reconstruct(basis: &DvrBasis, samples: &[Complex64]) -> Result<Reconstruction> {
    let n = basis.j_max;
    if samples.len() > n {
        return Err(Error::Dimension(format!(
            "{} samples exceed basis size {n}",
            samples.len()
        )));
    }
    let s = basis.dz.sqrt();
    let coefficients = (1..=n)
        .map(|i| {
            samples
                .iter()
                .enumerate()
                .map(|(j, b)| b * basis.v(i, j + 1))
                .sum::<Complex64>()
                * s
        })
        .collect();
    Ok(Reconstruction {
        l_eff: basis.l_eff,
        coefficients,
    })
}

/// Spectral leakage `|Σ_{j<=jmax} |a_j|² − ∫ |Ψ|² dz|` with `a_j = ∫ φ_j Ψ dz`.
pub fn bandwidth_defect<F>(field: F, j_max: usize, l_eff: f64) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    check_args(j_max, l_eff)?;
    let rule = GaussLegendre::new(20).composite(0.0, l_eff, 16 * (j_max + 1));
    let values: Vec<Complex64> = rule.iter().map(|&(z, _)| field(z)).collect();
    let norm: f64 = values.iter().zip(&rule).map(|(v, (_, w))| v.norm_sqr() * w).sum();
    let captured: f64 = (1..=j_max)
        .map(|j| {
            values
                .iter()
                .zip(&rule)
                .map(|(v, &(z, w))| v * (w * eval_phi_unchecked(j, z, l_eff)))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum();
    Ok((captured - norm).abs())
}

/// Fictitious bottom depth `(j_max + 1/2) Δz` that turns an arbitrary array
/// spacing into a DVR grid. Must not be shallower than `min_depth`.
pub fn effective_depth(dz: f64, j_max: usize, min_depth: f64) -> Result<f64> {
    if !(dz > 0.0 && dz.is_finite()) {
        return Err(Error::Config(format!("array spacing must be positive, got {dz}")));
    }
    if j_max == 0 {
        return Err(Error::Config("j_max must be at least 1".into()));
    }
    let l = (j_max as f64 + 0.5) * dz;
    if l < min_depth {
        return Err(Error::Config(format!(
            "effective depth {l} is shallower than the water column {min_depth}"
        )));
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_function_basis() {
        let b = build_dvr(1, 100.0).unwrap();
        assert!((b.depths()[0] - 100.0 * (PI / 1.5).cos().acos() / PI).abs() < 1e-12);
        assert!((b.depths()[0] - 66.67).abs() < 0.01);
    }

    #[test]
    fn phi_boundary_values() {
        assert_eq!(eval_phi(1, 0.0, 50.0).unwrap(), 0.0);
        let v = eval_phi(3, 50.0, 50.0).unwrap();
        assert!((v - (2.0f64 / 50.0).sqrt()).abs() < 1e-14);
        assert!(eval_phi(0, 1.0, 50.0).is_err());
        assert!(eval_phi(1, 51.0, 50.0).is_err());
    }

    #[test]
    fn chi_vanishes_at_surface() {
        let b = build_dvr(10, 100.0).unwrap();
        for j in 1..=10 {
            assert!(b.chi(j, 0.0).abs() < 1e-14);
        }
        assert!(b.eval_chi(0, 1.0).is_err());
        assert!(b.eval_chi(11, 1.0).is_err());
    }

    #[test]
    fn zero_samples_give_zero_profile() {
        let b = build_dvr(12, 300.0).unwrap();
        let r = reconstruct(&b, &[Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(r.eval_on(&[0.0, 17.0, 299.0]).iter().all(|v| v.norm() == 0.0));
        assert!(reconstruct(&b, &vec![Complex64::new(1.0, 0.0); 13]).is_err());
    }

    #[test]
    fn effective_depth_values() {
        assert!((effective_depth(4.5, 100, 100.0).unwrap() - 452.25).abs() < 1e-12);
        let dz = 300.0 / 30.5;
        assert!((effective_depth(dz, 30, 100.0).unwrap() - 300.0).abs() < 1e-12);
        assert!((effective_depth(9.52, 30, 100.0).unwrap() - 290.36).abs() < 1e-9);
        assert!(effective_depth(1.0, 10, 100.0).is_err());
        assert!(effective_depth(0.0, 10, 1.0).is_err());
    }

    #[test]
    fn interpolation_matrix_matches_reconstruct() {
        let b = build_dvr(20, 300.0).unwrap();
        let samples: Vec<Complex64> = (0..7).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let depths = [0.0, 13.3, 55.0, 99.0];
        let m = b.interpolation_matrix(&depths, samples.len()).unwrap();
        let r = reconstruct(&b, &samples).unwrap();
        for (row, &z) in m.iter().zip(&depths) {
            let v: Complex64 = row.iter().zip(&samples).map(|(w, s)| s * *w).sum();
            assert!((v - r.eval(z)).norm() < 1e-12);
        }
        assert!(b.interpolation_matrix(&depths, 21).is_err());
    }
}
