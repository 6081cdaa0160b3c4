#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use oamspec_core::states::{OamState, Spectrum};
use proptest::prelude::*;

/// `A A^dagger / Tr` for a `dim x rank` matrix built from `entries`.
pub fn state_from_entries(n: usize, radial: usize, rank: usize, entries: &[(f64, f64)]) -> OamState {
    let dim = (2 * n + 1) * radial;
    let a = DMatrix::from_fn(dim, rank, |i, j| {
        let (re, im) = entries[(i * rank + j) % entries.len()];
        Complex64::new(re, im)
    });
    let mut rho = &a * a.adjoint();
    let tr = rho.trace().re;
    rho.unscale_mut(tr);
    // symmetrize away rounding so validation sees an exactly Hermitian matrix
    let rho = (&rho + rho.adjoint()).scale(0.5);
    OamState::from_density_matrix(n, radial, rho).expect("random state is valid")
}

/// Random mixed states with `N <= 5`, `P <= 3`.
pub fn arb_state() -> impl Strategy<Value = OamState> {
    (
        1usize..=5,
        1usize..=3,
        1usize..=4,
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 33 * 4),
    )
        .prop_filter("nonzero", |(_, _, _, e)| {
            e.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|(n, p, r, e)| state_from_entries(n, p, r, &e))
}

/// Random spectra on `[-n, n]` with every weight bounded away from zero.
pub fn arb_spectrum(n_max: usize) -> impl Strategy<Value = Spectrum> {
    (1usize..=n_max).prop_flat_map(|n| {
        prop::collection::vec(0.05f64..1.0, 2 * n + 1).prop_map(move |w| Spectrum::from_weights(n, w).unwrap())
    })
}

pub fn arb_symmetric_spectrum(n_max: usize) -> impl Strategy<Value = Spectrum> {
    arb_spectrum(n_max).prop_map(|s| s.symmetrized())
}
