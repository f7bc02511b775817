//! Reconstruction fidelity and confidence ranges.

use std::io::Write;

use num_complex::Complex64;

use crate::dvr::Reconstruction;
use crate::error::{Error, Result};
use crate::field::{CwField, PulseField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityResult {
    pub value: f64,
    pub a_exact: f64,
    pub a_est: f64,
}

/// Trapezoid weights for ascending, possibly nonuniform abscissae.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = 0.5 * (x[i + 1] - x[i]);
        w[i] += d;
        w[i + 1] += d;
    }
    w
}

/// `|∫ a* b|² / (∫|a|² ∫|b|²)` with trapezoid weights on `depths`.
pub fn fidelity_profiles(depths: &[f64], exact: &[Complex64], est: &[Complex64]) -> Result<FidelityResult> {
    if exact.len() != depths.len() || est.len() != depths.len() {
        return Err(Error::Dimension(format!(
            "profiles of length {} and {} on {} depths",
            exact.len(),
            est.len(),
            depths.len()
        )));
    }
    let w = trapezoid_weights(depths);
    fidelity_weighted(&w, exact, est)
}

fn fidelity_weighted(w: &[f64], exact: &[Complex64], est: &[Complex64]) -> Result<FidelityResult> {
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut a_exact = 0.0;
    let mut a_est = 0.0;
    for ((a, b), &wi) in exact.iter().zip(est).zip(w) {
        overlap += a.conj() * b * wi;
        a_exact += a.norm_sqr() * wi;
        a_est += b.norm_sqr() * wi;
    }
    if !(a_exact > 0.0) || !(a_est > 0.0) {
        return Err(Error::Degenerate("fidelity of a zero-norm field".into()));
    }
    Ok(FidelityResult {
        value: overlap.norm_sqr() / (a_exact * a_est),
        a_exact,
        a_est,
    })
}

/// Depths of `field`'s grid in `[0, h]`, with `h` appended when it is not a node.
fn water_column_depths(field: &CwField, h: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let n = field.grid.count_up_to(h);
    let mut depths: Vec<f64> = (0..n).map(|i| field.grid.z(i)).collect();
    let mut values = field.profile[..n].to_vec();
    if h - depths[n - 1] > 1e-9 * h {
        depths.push(h);
        values.push(field.value_at(h)?);
    }
    Ok((depths, values))
}

/// CW fidelity over the water column `[0, h]` on the exact field's grid.
pub fn fidelity_cw(exact: &CwField, est: &Reconstruction, h: f64) -> Result<FidelityResult> {
    let (depths, values) = water_column_depths(exact, h)?;
    let est_values = est.eval_on(&depths);
    fidelity_profiles(&depths, &values, &est_values)
}

/// Pulse fidelity `|∫∫ a* b dt dz|² / (∫∫|a|² ∫∫|b|²)` over the time window
/// and depths in `[0, h]`.
pub fn fidelity_pulse(exact: &PulseField, est: &PulseField, h: f64) -> Result<FidelityResult> {
    if exact.times != est.times || exact.depths != est.depths {
        return Err(Error::Dimension("pulse fields on different axes".into()));
    }
    let nz = exact
        .depths
        .iter()
        .take_while(|&&z| z <= h * (1.0 + 1e-12))
        .count();
    if nz < 2 {
        return Err(Error::Dimension(format!("fewer than two depths in [0, {h}]")));
    }
    let wt = trapezoid_weights(&exact.times);
    let wz = trapezoid_weights(&exact.depths[..nz]);
    let mut w = Vec::with_capacity(wt.len() * nz);
    let mut a = Vec::with_capacity(w.capacity());
    let mut b = Vec::with_capacity(w.capacity());
    for (ti, t_w) in wt.iter().enumerate() {
        for (zi, z_w) in wz.iter().enumerate() {
            w.push(t_w * z_w);
            a.push(exact.at(ti, zi));
            b.push(est.at(ti, zi));
        }
    }
    fidelity_weighted(&w, &a, &b)
}

/// Intervals of the sweep variable where fidelity exceeds the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRange {
    pub threshold: f64,
    pub intervals: Vec<(f64, f64)>,
    /// Isolated single-sample violations absorbed into an interval.
    pub dips: Vec<(f64, f64)>,
}

impl ConfidenceRange {
    /// Upper end of the interval that starts at the low end of the sweep.
    pub fn upper_boundary(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.1)
    }

    pub fn write_summary<W: Write>(&self, mut out: W, label: &str) -> Result<()> {
        writeln!(out, "[{label}]")?;
        writeln!(out, "threshold = {}", self.threshold)?;
        let ivs: Vec<String> = self.intervals.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
        writeln!(out, "intervals = [{}]", ivs.join(", "))?;
        let dips: Vec<String> = self.dips.iter().map(|(x, f)| format!("[{x}, {f}]")).collect();
        writeln!(out, "dips = [{}]", dips.join(", "))?;
        Ok(())
    }
}

/// Maximal intervals with `F > threshold`, crossings by linear
/// interpolation. A single sample below threshold whose neighbours are both
/// above does not split an interval; it is recorded in `dips`.
pub fn confidence_range(x: &[f64], fidelity: &[f64], threshold: f64) -> Result<ConfidenceRange> {
    if x.len() != fidelity.len() {
        return Err(Error::Dimension(format!(
            "{} abscissae for {} fidelity values",
            x.len(),
            fidelity.len()
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("sweep grid must be strictly ascending".into()));
    }
    let n = x.len();
    let mut above: Vec<bool> = fidelity.iter().map(|&f| f > threshold).collect();
    let mut dips = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !above[i] && fidelity[i - 1] > threshold && fidelity[i + 1] > threshold {
            above[i] = true;
            dips.push((x[i], fidelity[i]));
        }
    }
    let crossing = |i: usize, j: usize| {
        let (fa, fb) = (fidelity[i], fidelity[j]);
        if (fb - fa).abs() < f64::MIN_POSITIVE {
            0.5 * (x[i] + x[j])
        } else {
            x[i] + (threshold - fa) / (fb - fa) * (x[j] - x[i])
        }
    };
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if !above[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && above[i + 1] {
            i += 1;
        }
        let end = i;
        let lo = if start == 0 { x[0] } else { crossing(start - 1, start) };
        let hi = if end + 1 == n { x[n - 1] } else { crossing(end, end + 1) };
        intervals.push((lo, hi));
        i += 1;
    }
    Ok(ConfidenceRange {
        threshold,
        intervals,
        dips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_interval_when_always_above() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let cr = confidence_range(&x, &[1.0; 10], 0.9).unwrap();
        assert_eq!(cr.intervals, vec![(0.0, 9.0)]);
        assert!(cr.dips.is_empty());
    }

    #[test]
    fn crossing_is_interpolated_and_dips_absorbed() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let f = [1.0, 0.95, 0.88, 0.97, 0.95, 0.85, 0.7, 0.95];
        let cr = confidence_range(&x, &f, 0.9).unwrap();
        assert_eq!(cr.dips, vec![(2.0, 0.88)]);
        assert_eq!(cr.intervals.len(), 2);
        assert!((cr.intervals[0].1 - 4.5).abs() < 1e-12);
        assert!((cr.intervals[1].0 - (6.0 + 0.2 / 0.25)).abs() < 1e-12);
        assert_eq!(cr.intervals[1].1, 7.0);
        assert!((cr.upper_boundary().unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn two_point_dip_splits() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let f = [1.0, 0.8, 0.8, 1.0, 1.0];
        let cr = confidence_range(&x, &f, 0.9).unwrap();
        assert_eq!(cr.intervals.len(), 2);
    }

    #[test]
    fn fidelity_identity_and_errors() {
        let z = [0.0, 1.0, 2.0];
        let a = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5)];
        assert!((fidelity_profiles(&z, &a, &a).unwrap().value - 1.0).abs() < 1e-15);
        let zero = [Complex64::new(0.0, 0.0); 3];
        assert!(matches!(fidelity_profiles(&z, &a, &zero), Err(Error::Degenerate(_))));
        assert!(fidelity_profiles(&z, &a, &a[..2]).is_err());
    }
}
