use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use dvr_recon::dvr::{bandwidth_defect, effective_depth, eval_phi};
use dvr_recon::{build_dvr, build_dvr_numeric, reconstruct};

const SIZES: [usize; 6] = [1, 2, 5, 10, 30, 100];

#[test]
fn transform_is_orthogonal() {
    for j_max in SIZES {
        let b = build_dvr(j_max, 300.0).unwrap();
        for a in 1..=j_max {
            for c in 1..=j_max {
                let dot: f64 = (1..=j_max).map(|i| b.v(i, a) * b.v(i, c)).sum();
                let expect = if a == c { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "j_max {j_max}: <{a},{c}> = {dot}");
            }
        }
    }
}

#[test]
fn cardinal_functions_are_pinned_to_grid() {
    for j_max in SIZES {
        let b = build_dvr(j_max, 100.0).unwrap();
        let s = b.spacing().sqrt();
        for i in 1..=j_max {
            for j in 1..=j_max {
                let v = b.chi(j, b.depths()[i - 1]) * s;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10, "j_max {j_max}: chi_{j}(z_{i}) = {v}");
            }
        }
    }
}

#[test]
fn numeric_diagonalization_agrees_with_closed_form() {
    for j_max in SIZES {
        let a = build_dvr(j_max, 100.0).unwrap();
        let n = build_dvr_numeric(j_max, 100.0).unwrap();
        for j in 0..j_max {
            assert!((a.eigenvalues()[j] - n.eigenvalues()[j]).abs() < 1e-10);
            assert!((a.depths()[j] - n.depths()[j]).abs() < 1e-10 * 100.0);
        }
        for i in 1..=j_max {
            for j in 1..=j_max {
                assert!((a.v(i, j) - n.v(i, j)).abs() < 1e-10, "j_max {j_max}: V[{i},{j}]");
            }
        }
    }
}

#[test]
fn grid_depths_for_ten_functions_on_hundred_metres() {
    let b = build_dvr(10, 100.0).unwrap();
    for (j, z) in [(1, 9.52), (2, 19.04), (5, 47.62), (10, 95.24)] {
        assert!((b.depths()[j - 1] - z).abs() < 0.01, "z_{j} = {}", b.depths()[j - 1]);
    }
}

#[test]
fn effective_depth_from_spacing() {
    assert_eq!(effective_depth(2.0, 150, 100.0).unwrap(), 301.0);
    assert!(effective_depth(2.0, 10, 100.0).is_err());
    let dz = 4.5;
    let l = effective_depth(dz, 67, 100.0).unwrap();
    let b = build_dvr(67, l).unwrap();
    assert!((b.spacing() - dz).abs() < 1e-12);
}

fn coefficients() -> impl Strategy<Value = (usize, Vec<(f64, f64)>)> {
    (1usize..40).prop_flat_map(|n| (Just(n), prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn band_limited_fields_are_reconstructed_exactly(
        (j_max, c) in coefficients(),
        l in 50.0..400.0f64,
    ) {
        let basis = build_dvr(j_max, l).unwrap();
        let coef: Vec<Complex64> = c.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let field = |z: f64| -> Complex64 {
            coef.iter().enumerate().map(|(i, a)| a * eval_phi(i + 1, z, l).unwrap()).sum()
        };
        let samples: Vec<Complex64> = basis.depths().iter().map(|&z| field(z)).collect();
        let rec = reconstruct(&basis, &samples).unwrap();
        for k in 0..=200 {
            let z = l * k as f64 / 200.0;
            prop_assert!((rec.eval(z) - field(z)).norm() < 1e-9);
        }
    }

    #[test]
    fn parseval_for_band_limited_fields((j_max, c) in coefficients(), l in 50.0..400.0f64) {
        let basis = build_dvr(j_max, l).unwrap();
        let norm: f64 = c.iter().map(|(a, b)| a * a + b * b).sum();
        let samples: Vec<Complex64> = basis
            .depths()
            .iter()
            .map(|&z| {
                c.iter()
                    .enumerate()
                    .map(|(i, &(a, b))| Complex64::new(a, b) * eval_phi(i + 1, z, l).unwrap())
                    .sum()
            })
            .collect();
        let sampled: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * basis.spacing();
        prop_assert!((sampled - norm).abs() < 1e-9 * norm.max(1.0));
        let defect = bandwidth_defect(
            |z| c.iter().enumerate().map(|(i, &(a, b))| Complex64::new(a, b) * eval_phi(i + 1, z, l).unwrap()).sum(),
            j_max,
            l,
        ).unwrap();
        prop_assert!(defect < 1e-9 * norm.max(1.0));
    }

    #[test]
    fn reconstruction_is_linear(
        (j_max, c) in coefficients(),
        s in -3.0..3.0f64,
    ) {
        let basis = build_dvr(j_max, 100.0).unwrap();
        let a: Vec<Complex64> = c.iter().map(|&(x, _)| Complex64::new(x, 0.0)).collect();
        let b: Vec<Complex64> = c.iter().map(|&(_, y)| Complex64::new(0.0, y)).collect();
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * s + y).collect();
        let (ra, rb, rs) = (
            reconstruct(&basis, &a).unwrap(),
            reconstruct(&basis, &b).unwrap(),
            reconstruct(&basis, &sum).unwrap(),
        );
        for k in 0..=20 {
            let z = 5.0 * k as f64;
            prop_assert!((rs.eval(z) - (ra.eval(z) * s + rb.eval(z))).norm() < 1e-10);
        }
    }

    /// A truncated sample set reconstructs with χ_j weights: the missing
    /// hydrophones act as zero readings.
    #[test]
    fn truncated_samples_act_as_zeros((j_max, c) in coefficients(), keep in 0usize..40) {
        let keep = keep.min(j_max);
        prop_assume!(keep > 0);
        let basis = build_dvr(j_max, 300.0).unwrap();
        let full: Vec<Complex64> = c.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        let mut padded = full[..keep].to_vec();
        padded.resize(j_max, Complex64::new(0.0, 0.0));
        let (rt, rp) = (reconstruct(&basis, &full[..keep]).unwrap(), reconstruct(&basis, &padded).unwrap());
        for k in 0..=30 {
            let z = 10.0 * k as f64;
            prop_assert!((rt.eval(z) - rp.eval(z)).norm() < 1e-12);
        }
    }
}

/// Fields outside the band leak: a harmonic just above the basis carries
/// almost all of its energy outside the span.
#[test]
fn bandwidth_defect_detects_out_of_band_energy() {
    let l = 100.0;
    let defect = bandwidth_defect(|z| Complex64::new(eval_phi(11, z, l).unwrap(), 0.0), 10, l).unwrap();
    assert!((defect - 1.0).abs() < 1e-9);
    let inside = bandwidth_defect(|z| Complex64::new((PI * z / (2.0 * l)).sin(), 0.0), 10, l).unwrap();
    assert!(inside < 1e-9);
}

/// Moving the fictitious depth shifts all grid points; a field sampled at
/// the shifted depths still reconstructs well while it stays band-limited.
#[test]
fn fictitious_depth_sensitivity() {
    let f = |z: f64| Complex64::new((0.07 * z).sin() * (-z / 400.0).exp(), 0.3 * (0.05 * z).sin());
    let err = |l: f64| {
        let b = build_dvr(60, l).unwrap();
        let samples: Vec<Complex64> = b.depths().iter().map(|&z| f(z)).collect();
        let rec = reconstruct(&b, &samples).unwrap();
        (0..=100)
            .map(|k| (rec.eval(k as f64) - f(k as f64)).norm())
            .fold(0.0, f64::max)
    };
    let base = err(300.0);
    assert!(base < 0.05, "base error {base}");
    for l in [295.0, 305.0] {
        assert!(err(l) < 2.0 * base + 0.01, "L' = {l}: {}", err(l));
    }
}
