use std::f64::consts::PI;

use oamspec_core::deviation::{
    average_fractional_overlap, center_offset, degraded_trace, fit_waist, overlap_percentage,
    overlap_percentage_numeric, DeviationConfig, TransverseGrid,
};
use oamspec_core::interferometer::{simulate_trace, InterferometerConfig};
use oamspec_core::reconstruct::{plan_sampling, r_squared, two_shot_from_traces, RSquaredForm};
use oamspec_core::states::gaussian_pure_state;
use proptest::prelude::*;

const URAD: f64 = 1e-6;

/// `I0(x)` by its power series; all terms are positive.
fn bessel_i0(x: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..500 {
        term *= (x / 2.0) * (x / 2.0) / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Mean of `exp(-a sin^2 theta)` over a period is `exp(-a/2) I0(a/2)`.
fn fractional_overlap_oracle(cfg: &DeviationConfig) -> f64 {
    let a = (2.0 * cfg.z * cfg.omega0.tan() / cfg.waist).powi(2);
    (-a / 2.0).exp() * bessel_i0(a / 2.0)
}

#[test]
fn average_matches_bessel_form() {
    for omega in [0.0, 30.0, 300.0, 1000.0, 3000.0, 10000.0] {
        for w in [0.2, 0.4, 0.725, 1.5] {
            let cfg = DeviationConfig::new(omega * URAD, 250.0, w).unwrap();
            let f = average_fractional_overlap(&cfg).unwrap();
            assert!(
                (f - fractional_overlap_oracle(&cfg)).abs() < 1e-12,
                "omega {omega}, w {w}"
            );
        }
    }
}

#[test]
fn numeric_overlap_matches_closed_form() {
    let grid = TransverseGrid::default();
    for omega in [30.0, 300.0, 1000.0, 3000.0] {
        let cfg = DeviationConfig::new(omega * URAD, 250.0, 0.4).unwrap();
        for k in 0..12 {
            let theta = k as f64 * PI / 12.0;
            let num = overlap_percentage_numeric(theta, &cfg, grid).unwrap();
            assert!(
                (num - overlap_percentage(theta, &cfg)).abs() < 1e-6,
                "omega {omega}, theta {theta}"
            );
        }
    }
}

#[test]
fn fractional_overlap_monotone_over_sweep() {
    let w = fit_waist(10000.0 * URAD, 250.0, 0.0817).unwrap();
    let values: Vec<f64> = (0..20)
        .map(|k| {
            let omega = 10000.0 * URAD * k as f64 / 19.0;
            average_fractional_overlap(&DeviationConfig::new(omega, 250.0, w).unwrap()).unwrap()
        })
        .collect();
    assert_eq!(values[0], 1.0);
    assert!(values.windows(2).all(|p| p[1] <= p[0]));
}

#[test]
fn fitted_waist_reproduces_both_reference_points() {
    let w = fit_waist(10000.0 * URAD, 250.0, 0.0817).unwrap();
    assert!((w - 0.725).abs() < 0.01, "fitted waist {w} mm");
    let cfg = DeviationConfig::new(10000.0 * URAD, 250.0, w).unwrap();
    let f = average_fractional_overlap(&cfg).unwrap();
    assert!((0.065..=0.098).contains(&f));
    let home = average_fractional_overlap(&cfg.with_omega0(30.5 * URAD)).unwrap();
    assert!((0.999..1.0).contains(&home));
}

/// Two-shot R^2 on a Gaussian sigma = 8 state after overlap degradation.
fn degraded_r_squared(omega: f64, waist: f64) -> f64 {
    let n = 40;
    let spec = gaussian_pure_state(8.0, n).unwrap().spectrum();
    let cfg = InterferometerConfig::default();
    let dev = DeviationConfig::new(omega, 250.0, waist).unwrap();
    let thetas = plan_sampling(n).unwrap().uniform_grid();
    let c = degraded_trace(
        &simulate_trace(&spec, &cfg, &thetas, 0.0).unwrap(),
        &dev,
        cfg.baseline(),
    )
    .unwrap();
    let d = degraded_trace(&simulate_trace(&spec, &cfg, &thetas, PI).unwrap(), &dev, cfg.baseline()).unwrap();
    let r = two_shot_from_traces(&c, &d, &cfg.polarization, n).unwrap();
    r_squared(&r.spectrum, &spec, RSquaredForm::Standard).unwrap()
}

#[test]
fn overlap_loss_degrades_reconstruction() {
    assert!(degraded_r_squared(0.0, 0.4) > 99.999_999);
    let home = degraded_r_squared(30.0 * URAD, 0.4);
    assert!(home >= 99.9, "{home}");
    let dove = degraded_r_squared(10000.0 * URAD, 0.4);
    assert!(dove < 99.0 && dove < home, "{dove}");
}

proptest! {
    #[test]
    fn overlap_decreases_with_offset(omega in 1e-6f64..0.05, t1 in 0.0f64..PI / 2.0, t2 in 0.0f64..PI / 2.0) {
        let cfg = DeviationConfig::new(omega, 250.0, 0.4).unwrap();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(center_offset(lo, &cfg) <= center_offset(hi, &cfg) + 1e-15);
        prop_assert!(overlap_percentage(lo, &cfg) >= overlap_percentage(hi, &cfg));
        prop_assert!((overlap_percentage(t1, &cfg) - overlap_percentage(-t1, &cfg)).abs() < 1e-12);
        prop_assert!((overlap_percentage(t1, &cfg) - overlap_percentage(t1 + PI, &cfg)).abs() < 1e-9);
    }

    #[test]
    fn fractional_overlap_non_increasing(a in 0.0f64..0.02, b in 0.0f64..0.02, w in 0.1f64..2.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f = |o| average_fractional_overlap(&DeviationConfig::new(o, 250.0, w).unwrap()).unwrap();
        prop_assert!(f(lo) >= f(hi) - 1e-15);
    }
}
