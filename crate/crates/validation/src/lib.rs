//! Reference states used to judge reconstruction quality.

use oamspec_core::states::{comb_state, diagonal_state, gaussian_pure_state, mix_states, OamState, Spectrum};
use oamspec_core::Result;

/// A named test state.
pub struct Fixture {
    pub name: &'static str,
    pub state: OamState,
}

impl Fixture {
    pub fn spectrum(&self) -> Spectrum {
        self.state.spectrum()
    }

    pub fn n(&self) -> usize {
        self.state.n()
    }
}

/// Gaussian pure state, standard deviation 8.
pub fn gaussian() -> Result<Fixture> {
    Ok(Fixture {
        name: "gaussian sigma=8",
        state: gaussian_pure_state(8.0, 50)?,
    })
}

/// 0.54 / 0.46 mixture of sigma = 10 and sigma = 6 Gaussian pure states.
pub fn mixture() -> Result<Fixture> {
    let n = 60;
    Ok(Fixture {
        name: "mixture 0.54/0.46",
        state: mix_states(&[
            (gaussian_pure_state(10.0, n)?, 0.54),
            (gaussian_pure_state(6.0, n)?, 0.46),
        ])?,
    })
}

/// Equal superposition of l = 0, +-4, +-8.
pub fn comb() -> Result<Fixture> {
    Ok(Fixture {
        name: "comb {0,+-4,+-8}",
        state: comb_state(&[0, 4, -4, 8, -8], 10)?,
    })
}

/// Diagonal mixed state with a heavy-tailed spectrum spread over three radial modes.
pub fn diagonal() -> Result<Fixture> {
    let n = 40;
    let w = (-(n as i32)..=n as i32)
        .map(|l| (1.0 + (f64::from(l) / 12.0).powi(2)).powf(-1.5))
        .collect();
    Ok(Fixture {
        name: "diagonal mixed",
        state: diagonal_state(&Spectrum::from_weights(n, w)?, &[0.6, 0.3, 0.1])?,
    })
}

pub fn all() -> Result<Vec<Fixture>> {
    Ok(vec![gaussian()?, mixture()?, comb()?, diagonal()?])
}
