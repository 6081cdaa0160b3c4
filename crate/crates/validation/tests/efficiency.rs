use oamspec_cli::commands::{reconstruct_shots, simulate_shots};
use oamspec_cli::config::ProtocolChoice;
use oamspec_core::interferometer::{InterferometerConfig, NoiseModel, PolarizationCurve};
use oamspec_core::reconstruct::{detection_efficiency, plan_sampling, DEFAULT_EFFICIENCY_THRESHOLD};

fn spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

#[test]
fn noisy_broad_spectrum_gives_flat_efficiency_with_growing_scatter() {
    let fx = oamspec_validation::diagonal().unwrap();
    let input = fx.spectrum();
    let kappa = 0.8;
    let cfg = InterferometerConfig {
        polarization: PolarizationCurve::Analytic { a: 0.3 },
        noise: NoiseModel {
            background: 40.0,
            shot_noise: true,
            seed: 11,
            ..NoiseModel::default()
        },
        ..InterferometerConfig::default()
    };
    let thetas = plan_sampling(fx.n()).unwrap().uniform_grid();
    let traces = simulate_shots(&input, &cfg, &thetas, ProtocolChoice::TwoShot).unwrap();
    let observed = reconstruct_shots(&traces, ProtocolChoice::TwoShot, &cfg.polarization, fx.n(), true)
        .unwrap()
        .spectrum;
    let report = detection_efficiency(&observed, &input, kappa, DEFAULT_EFFICIENCY_THRESHOLD).unwrap();
    assert!(report.skipped.is_empty());

    let ratio = |keep: &dyn Fn(i32) -> bool| -> Vec<f64> {
        report
            .per_mode
            .iter()
            .filter(|m| keep(m.l.abs()))
            .map(|m| m.value / kappa)
            .collect()
    };
    let core = ratio(&|l| l <= 20);
    let mean = core.iter().sum::<f64>() / core.len() as f64;
    assert!((mean - 100.0).abs() < 5.0, "mean eta/kappa {mean}");

    let inner = spread(&ratio(&|l| l <= 10));
    let outer = spread(&ratio(&|l| l > 30));
    assert!(outer > inner, "scatter {inner} near l = 0 vs {outer} in the tails");
}
