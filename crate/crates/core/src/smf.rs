//! Single-mode-fiber detector baseline.
//!
//! A hologram removes the helical phase of `LG_l^p` and the result is
//! projected onto the fiber's Gaussian mode of radius `sigma`. Lengths are in
//! units of the LG waist `w0`, so only `sigma / w0` enters.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{lg_radial, ModeIndex, RadialGrid};
use crate::states::Spectrum;

/// Largest radial index accepted by [`detection_efficiency_closed`].
pub const MAX_CLOSED_P: u32 = 16;
/// Largest `|l|` accepted by [`detection_efficiency_closed`].
pub const MAX_CLOSED_L: u32 = 60;

/// Relative quadrature error tolerated before the numeric route gives up.
const QUADRATURE_TOLERANCE: f64 = 1e-10;
/// Absolute slack for couplings that vanish by orthogonality.
const QUADRATURE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmfConfig {
    pub sigma_over_w0: f64,
    /// Overall quantum efficiency of the detection chain.
    pub kappa: f64,
    /// First-order diffraction efficiency of the hologram.
    #[serde(default = "default_diffraction")]
    pub diffraction_efficiency: f64,
}

fn default_diffraction() -> f64 {
    0.5
}

impl Default for SmfConfig {
    fn default() -> Self {
        Self {
            sigma_over_w0: 0.6,
            kappa: 1.0,
            diffraction_efficiency: default_diffraction(),
        }
    }
}

impl SmfConfig {
    pub fn new(sigma_over_w0: f64, kappa: f64) -> Result<Self> {
        let cfg = Self {
            sigma_over_w0,
            kappa,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_over_w0 > 0.0 && self.sigma_over_w0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma/w0 = {} must be positive",
                self.sigma_over_w0
            )));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidArgument(format!("kappa = {} outside (0, 1]", self.kappa)));
        }
        if !(self.diffraction_efficiency > 0.0 && self.diffraction_efficiency <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "diffraction efficiency = {} outside (0, 1]",
                self.diffraction_efficiency
            )));
        }
        Ok(())
    }

    /// Default radial grid for the coupling integral of `mode`.
    pub fn grid_for(&self, mode: ModeIndex) -> Result<RadialGrid> {
        RadialGrid::default_for(&[mode], 1.0)
    }
}

/// `C_l^p = int int LG_l^p e^{i l phi} sqrt(2 / (pi sigma^2)) e^{-rho^2/sigma^2} rho d rho d phi`
/// with `w0 = 1`.
pub fn coupling_coefficient_numeric(mode: ModeIndex, cfg: &SmfConfig, grid: &RadialGrid) -> Result<Complex64> {
    cfg.validate()?;
    if !grid.resolves(mode, 1.0) {
        return Err(Error::Quadrature(format!(
            "radius {} does not resolve mode (l={}, p={})",
            grid.max_radius(),
            mode.l,
            mode.p
        )));
    }
    let sigma = cfg.sigma_over_w0;
    let fiber_norm = (2.0 / (PI * sigma * sigma)).sqrt();
    let (value, err) = grid.try_integrate(|rho| {
        Ok(lg_radial(mode, 1.0, rho)? * fiber_norm * (-rho * rho / (sigma * sigma)).exp() * rho)
    })?;
    if err > QUADRATURE_TOLERANCE * value.abs() + QUADRATURE_FLOOR {
        return Err(Error::Quadrature(format!(
            "coupling integral for (l={}, p={}) unconverged: estimate {value:e}, error {err:e}",
            mode.l, mode.p
        )));
    }
    Ok(Complex64::new(2.0 * PI * value, 0.0))
}

/// `ln Gamma(k / 2)` for a positive integer `k`, by the exact recurrences
/// from `Gamma(1) = 1` and `Gamma(1/2) = sqrt(pi)`.
fn ln_gamma_half(k: u32) -> f64 {
    debug_assert!(k > 0);
    let mut x = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    let mut acc = if k.is_multiple_of(2) { 0.0 } else { 0.5 * PI.ln() };
    while 2.0 * x < f64::from(k) {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// `2F1(-p, b; c; x)`, a polynomial of degree `p`.
pub fn hyp2f1_terminating(p: u32, b: f64, c: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..p {
        let kf = f64::from(k);
        term *= (kf - f64::from(p)) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
    }
    sum
}

/// Closed-form detection efficiency `eta_l^p = kappa |C_l^p|^2`.
pub fn detection_efficiency_closed(mode: ModeIndex, cfg: &SmfConfig) -> Result<f64> {
    cfg.validate()?;
    let l = mode.abs_l();
    let p = mode.p;
    if p > MAX_CLOSED_P || l > MAX_CLOSED_L {
        return Err(Error::OutOfRange(format!(
            "closed-form efficiency supports p <= {MAX_CLOSED_P}, |l| <= {MAX_CLOSED_L}; got p = {p}, l = {}",
            mode.l
        )));
    }
    let q = cfg.sigma_over_w0.powi(-2);
    let lf = f64::from(l);
    let f = hyp2f1_terminating(p, 1.0 + lf / 2.0, 1.0 + lf, 2.0 / (1.0 + q));
    if f == 0.0 {
        return Ok(0.0);
    }
    let ln_eta = (4.0 * PI).ln() + ln_gamma_half(2 * (p + l + 1)) - ln_gamma_half(2 * (p + 1)) - lf * 2f64.ln()
        + q.ln()
        - (2.0 + lf) * (1.0 + q).ln()
        - 2.0 * ln_gamma_half(l + 1)
        + 2.0 * f.abs().ln();
    Ok(cfg.kappa * ln_eta.exp())
}

/// Apparent count rate per `l` an SLM + fiber scan would report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparentEntry {
    pub l: i32,
    pub apparent_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparentSpectrum {
    pub entries: Vec<ApparentEntry>,
}

impl ApparentSpectrum {
    pub fn get(&self, l: i32) -> Option<f64> {
        self.entries.iter().find(|e| e.l == l).map(|e| e.apparent_value)
    }

    /// Headered CSV with columns `l,apparent_value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `apparent_l = eta_diff * kappa * sum_p w_p |C_l^p|^2 * S_l`.
pub fn smf_spectrum_response(
    input: &Spectrum,
    radial_weights: &BTreeMap<u32, f64>,
    cfg: &SmfConfig,
) -> Result<ApparentSpectrum> {
    cfg.validate()?;
    if radial_weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument(
            "radial weights must be finite and non-negative".into(),
        ));
    }
    let mut entries = Vec::with_capacity(input.values().len());
    for (l, s) in input.iter() {
        let mut eta = 0.0;
        for (&p, &w) in radial_weights {
            if w > 0.0 {
                eta += w * detection_efficiency_closed(ModeIndex::new(l, p), cfg)?;
            }
        }
        entries.push(ApparentEntry {
            l,
            apparent_value: cfg.diffraction_efficiency * eta * s,
        });
    }
    Ok(ApparentSpectrum { entries })
}
