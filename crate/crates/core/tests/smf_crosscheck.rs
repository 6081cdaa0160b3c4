use oamspec_core::modes::ModeIndex;
use oamspec_core::smf::{coupling_coefficient_numeric, detection_efficiency_closed, SmfConfig};
use proptest::prelude::*;

const RATIOS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

#[test]
fn closed_form_matches_quadrature_on_full_table() {
    let mut worst: f64 = 0.0;
    let grid = SmfConfig::default().grid_for(ModeIndex::new(20, 8)).unwrap();
    for ratio in RATIOS {
        let cfg = SmfConfig::new(ratio, 1.0).unwrap();
        for p in 0..=8 {
            for l in -20..=20 {
                let m = ModeIndex::new(l, p);
                let closed = detection_efficiency_closed(m, &cfg).unwrap();
                let numeric = coupling_coefficient_numeric(m, &cfg, &grid).unwrap().norm_sqr();
                worst = worst.max((closed - numeric).abs());
            }
        }
    }
    assert!(worst < 1e-8, "worst deviation {worst:e}");
}

#[test]
fn fundamental_efficiency_declines_with_l() {
    for ratio in RATIOS {
        let cfg = SmfConfig::new(ratio, 1.0).unwrap();
        let eta: Vec<f64> = (0..=60)
            .map(|l| detection_efficiency_closed(ModeIndex::new(l, 0), &cfg).unwrap())
            .collect();
        assert!(eta.windows(2).all(|w| w[1] < w[0]), "sigma/w0 = {ratio}");
    }
    // narrower fiber modes lose the higher orders faster
    let ratio_at = |r: f64, l: i32| {
        let cfg = SmfConfig::new(r, 1.0).unwrap();
        detection_efficiency_closed(ModeIndex::new(l, 0), &cfg).unwrap()
            / detection_efficiency_closed(ModeIndex::new(0, 0), &cfg).unwrap()
    };
    for l in 1..=20 {
        assert!(ratio_at(0.2, l) < ratio_at(0.6, l) && ratio_at(0.6, l) < ratio_at(1.0, l));
    }
}

proptest! {
    #[test]
    fn efficiency_bounded_by_kappa(l in -60i32..=60, p in 0u32..=16, ratio in 0.05f64..5.0, kappa in 0.01f64..=1.0) {
        let cfg = SmfConfig::new(ratio, kappa).unwrap();
        let eta = detection_efficiency_closed(ModeIndex::new(l, p), &cfg).unwrap();
        prop_assert!(eta >= 0.0);
        prop_assert!(eta <= kappa * (1.0 + 1e-12));
    }

    #[test]
    fn efficiency_symmetric_in_l(l in 0i32..=60, p in 0u32..=16, ratio in 0.05f64..5.0) {
        let cfg = SmfConfig::new(ratio, 1.0).unwrap();
        let a = detection_efficiency_closed(ModeIndex::new(l, p), &cfg).unwrap();
        let b = detection_efficiency_closed(ModeIndex::new(-l, p), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
