//! Mach-Zehnder interferometer with an image rotator in one arm.
//!
//! Two routes to the detection probability are provided. The operator route
//! builds the full two-arm transfer matrix on the truncated `|l, p>` basis
//! (both polarization components) and evaluates `Tr(P rho P^dagger)`. The
//! closed form only needs the spectrum:
//!
//! ```text
//! I(theta) = |k1|^2 + |k2|^2 + 2 |k1| |k2| cos psi(theta) sum_l S_l cos(delta + 2 l theta)
//! ```

use std::f64::consts::PI;
use std::io::Read;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::states::{OamState, Spectrum};
use crate::trace::{IntensityTrace, TraceKind, TraceMeta, TraceSample};

/// Azimuth `psi(theta)` and ellipticity `chi(theta)` of the field leaving the
/// image rotator, for x-polarized input. Curves are pi-periodic in theta.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolarizationCurve {
    /// Polarization untouched: `cos psi = 1`.
    #[default]
    Ideal,
    /// `cos psi = sqrt(1 - a sin^2 theta)`, `chi = 0`.
    Analytic { a: f64 },
    /// Measured samples over one period, linearly interpolated.
    Tabulated {
        theta_rad: Vec<f64>,
        cos_psi: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chi_rad: Option<Vec<f64>>,
    },
}

impl PolarizationCurve {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Ideal => Ok(()),
            Self::Analytic { a } => {
                if (0.0..1.0).contains(a) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "polarization coefficient a = {a} must lie in [0, 1)"
                    )))
                }
            }
            Self::Tabulated {
                theta_rad,
                cos_psi,
                chi_rad,
            } => {
                if theta_rad.is_empty() || theta_rad.len() != cos_psi.len() {
                    return Err(Error::InvalidArgument(format!(
                        "polarization table has {} angles and {} values",
                        theta_rad.len(),
                        cos_psi.len()
                    )));
                }
                if let Some(chi) = chi_rad {
                    if chi.len() != theta_rad.len() {
                        return Err(Error::InvalidArgument("chi column length differs".into()));
                    }
                }
                if theta_rad.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidArgument(
                        "polarization table angles must increase strictly".into(),
                    ));
                }
                if theta_rad.last().unwrap() - theta_rad[0] >= PI {
                    return Err(Error::InvalidArgument(
                        "polarization table must span less than one period (pi)".into(),
                    ));
                }
                if let Some(c) = cos_psi.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
                    return Err(Error::InvalidArgument(format!("cos psi = {c} outside (0, 1]")));
                }
                Ok(())
            }
        }
    }

    pub fn cos_psi(&self, theta: f64) -> f64 {
        match self {
            Self::Ideal => 1.0,
            Self::Analytic { a } => {
                let s = theta.sin();
                (1.0 - a * s * s).sqrt()
            }
            Self::Tabulated { theta_rad, cos_psi, .. } => periodic_interp(theta_rad, cos_psi, theta),
        }
    }

    pub fn chi(&self, theta: f64) -> f64 {
        match self {
            Self::Tabulated {
                theta_rad,
                chi_rad: Some(chi),
                ..
            } => periodic_interp(theta_rad, chi, theta),
            _ => 0.0,
        }
    }

    /// Read a table with columns `theta_rad` and either `cos_psi` or
    /// `inv_cos_psi` (the measured `1/cos psi`), plus optional `chi_rad`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let theta_col =
            col("theta_rad").ok_or_else(|| Error::InvalidArgument("polarization table lacks theta_rad".into()))?;
        let (value_col, inverted) = match (col("cos_psi"), col("inv_cos_psi")) {
            (Some(c), _) => (c, false),
            (None, Some(c)) => (c, true),
            _ => {
                return Err(Error::InvalidArgument(
                    "polarization table lacks cos_psi or inv_cos_psi".into(),
                ))
            }
        };
        let chi_col = col("chi_rad");
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad number in polarization table: {e}")))
            };
            let v = parse(value_col)?;
            let chi = chi_col.map(parse).transpose()?.unwrap_or(0.0);
            rows.push((parse(theta_col)?, if inverted { 1.0 / v } else { v }, chi));
        }
        // fold onto one period starting at the first angle
        let start = rows.first().map_or(0.0, |r| r.0);
        for r in &mut rows {
            r.0 = start + (r.0 - start).rem_euclid(PI);
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
        let curve = Self::Tabulated {
            theta_rad: rows.iter().map(|r| r.0).collect(),
            cos_psi: rows.iter().map(|r| r.1).collect(),
            chi_rad: chi_col.map(|_| rows.iter().map(|r| r.2).collect()),
        };
        curve.validate()?;
        Ok(curve)
    }
}

/// Linear interpolation on a pi-periodic table.
fn periodic_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let x0 = xs[0];
    let x = x0 + (x - x0).rem_euclid(PI);
    let k = xs.partition_point(|&v| v <= x);
    let (xa, ya, xb, yb) = if k == xs.len() {
        (xs[k - 1], ys[k - 1], x0 + PI, ys[0])
    } else {
        (xs[k - 1], ys[k - 1], xs[k], ys[k])
    };
    ya + (yb - ya) * (x - xa) / (xb - xa)
}

/// Additive noise on measured traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Constant phase-independent probability added to every sample.
    pub background: f64,
    /// Poisson resampling of `photons_per_unit * value`.
    pub shot_noise: bool,
    pub photons_per_unit: f64,
    /// Background increase over one full theta sweep.
    pub drift: f64,
    pub seed: u64,
    /// Index of this sweep in the acquisition sequence; drift accumulates
    /// across sweeps.
    pub sweep: u32,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            background: 0.0,
            shot_noise: false,
            photons_per_unit: 1e6,
            drift: 0.0,
            seed: 0,
            sweep: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.background >= 0.0) || !(self.drift >= 0.0) || !(self.photons_per_unit > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise parameters must be non-negative (background {}, drift {}, photons/unit {})",
                self.background, self.drift, self.photons_per_unit
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.background == 0.0 && self.drift == 0.0 && !self.shot_noise
    }

    /// Copy for the `sweep`-th shot of an acquisition, with its own seed.
    pub fn for_sweep(&self, sweep: u32) -> Self {
        Self {
            seed: self.seed ^ u64::from(sweep).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            sweep,
            ..self.clone()
        }
    }
}

/// Arm amplitudes, polarization behaviour and noise of the interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterferometerConfig {
    pub k1_mag: f64,
    pub k2_mag: f64,
    pub polarization: PolarizationCurve,
    pub noise: NoiseModel,
    /// Offset between the requested and the realized phase setting.
    pub phase_error: f64,
}

impl Default for InterferometerConfig {
    fn default() -> Self {
        Self {
            k1_mag: 0.5,
            k2_mag: 0.5,
            polarization: PolarizationCurve::Ideal,
            noise: NoiseModel::default(),
            phase_error: 0.0,
        }
    }
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        for k in [self.k1_mag, self.k2_mag] {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::InvalidArgument(format!("arm amplitude {k} outside [0, 1]")));
            }
        }
        if !self.phase_error.is_finite() {
            return Err(Error::InvalidArgument("phase error is not finite".into()));
        }
        self.polarization.validate()?;
        self.noise.validate()
    }

    /// Phase-independent part `|k1|^2 + |k2|^2` of the noiseless signal.
    pub fn baseline(&self) -> f64 {
        self.k1_mag * self.k1_mag + self.k2_mag * self.k2_mag
    }

    /// Hex SHA-256 of the JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Reflection operator `M = sum e^{-i l pi} |-l, p><l, p|`.
pub fn mirror_operator(n: usize, radial: usize) -> DMatrix<Complex64> {
    reflection_with_phase(n, radial, |l| -f64::from(l) * PI)
}

/// Image rotator at angle `theta`: `IR = sum e^{-i l (pi + 2 theta)} |-l, p><l, p|`.
pub fn rotator_operator(n: usize, radial: usize, theta: f64) -> DMatrix<Complex64> {
    reflection_with_phase(n, radial, |l| -f64::from(l) * (PI + 2.0 * theta))
}

fn reflection_with_phase<F: Fn(i32) -> f64>(n: usize, radial: usize, phase: F) -> DMatrix<Complex64> {
    let dim = (2 * n + 1) * radial;
    let mut m = DMatrix::zeros(dim, dim);
    let ni = n as i32;
    for l in -ni..=ni {
        let c = Complex64::from_polar(1.0, phase(l));
        for p in 0..radial {
            let from = (l + ni) as usize * radial + p;
            let to = (-l + ni) as usize * radial + p;
            m[(to, from)] = c;
        }
    }
    m
}

pub fn mirror_apply(state: &OamState) -> OamState {
    state.conjugated_by(&mirror_operator(state.n(), state.radial()))
}

pub fn rotator_apply(state: &OamState, theta: f64) -> OamState {
    state.conjugated_by(&rotator_operator(state.n(), state.radial(), theta))
}

/// Noiseless detection probability from the spectrum alone.
pub fn intensity_closed_form(spectrum: &Spectrum, cfg: &InterferometerConfig, theta: f64, delta: f64) -> f64 {
    let fringe: f64 = spectrum
        .iter()
        .filter(|(_, s)| *s != 0.0)
        .map(|(l, s)| s * (delta + 2.0 * f64::from(l) * theta).cos())
        .sum();
    cfg.baseline() + 2.0 * cfg.k1_mag * cfg.k2_mag * cfg.polarization.cos_psi(theta) * fringe
}

/// Detection probability `Tr(P rho P^dagger)` from the full transfer
/// operator, with the output split into x and y polarization blocks.
///
/// The result depends only on the diagonal `C^{p,p}_{l,l}`; it is the
/// independent check on [`intensity_closed_form`]. States with population on
/// `|l| = N` are accepted; use [`OamState::has_edge_support`] to detect them.
pub fn intensity_operator_oracle(state: &OamState, cfg: &InterferometerConfig, theta: f64, delta: f64) -> f64 {
    let p_op = transfer_operator(state.n(), state.radial(), cfg, theta, delta);
    let out = &p_op * state.density_matrix() * p_op.adjoint();
    out.trace().re
}

/// Two-arm transfer operator; rows `0..D` are the x component, `D..2D` the y
/// component of the output field.
pub fn transfer_operator(
    n: usize,
    radial: usize,
    cfg: &InterferometerConfig,
    theta: f64,
    delta: f64,
) -> DMatrix<Complex64> {
    let mirror = mirror_operator(n, radial);
    let rotator = rotator_operator(n, radial, theta);
    let dim = mirror.nrows();
    let cos_psi = cfg.polarization.cos_psi(theta);
    let sin_psi = (1.0 - cos_psi * cos_psi).max(0.0).sqrt();
    let chi = cfg.polarization.chi(theta);
    let arm2 = Complex64::from_polar(cfg.k2_mag, -delta);
    let x_block = mirror.scale(cfg.k1_mag) + &rotator * (arm2 * cos_psi);
    let y_block = &rotator * (arm2 * Complex64::from_polar(sin_psi, chi));
    let mut p = DMatrix::zeros(2 * dim, dim);
    p.view_mut((0, 0), (dim, dim)).copy_from(&x_block);
    p.view_mut((dim, 0), (dim, dim)).copy_from(&y_block);
    p
}

/// Synthesize a measured trace at phase `delta` over `thetas`.
///
/// Each sample is `background + drift * (sweep + k/M) + I(theta_k)`, then
/// optionally Poisson-resampled at `photons_per_unit`. Sample `k` draws from
/// its own ChaCha stream, so the output depends only on the seed and the
/// sample index.
pub fn simulate_trace(
    spectrum: &Spectrum,
    cfg: &InterferometerConfig,
    thetas: &[f64],
    delta: f64,
) -> Result<IntensityTrace> {
    cfg.validate()?;
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("theta grid is empty".into()));
    }
    if thetas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("theta grid must increase strictly".into()));
    }
    let noise = &cfg.noise;
    let m = thetas.len() as f64;
    let mut clamped = 0;
    let mut samples = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let drift = noise.drift * (f64::from(noise.sweep) + k as f64 / m);
        let mut value = noise.background + drift + intensity_closed_form(spectrum, cfg, theta, delta + cfg.phase_error);
        if noise.shot_noise && value > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(k as u64);
            let lambda = value * noise.photons_per_unit;
            let poisson =
                Poisson::new(lambda).map_err(|e| Error::InvalidArgument(format!("poisson rate {lambda}: {e}")))?;
            value = poisson.sample(&mut rng) / noise.photons_per_unit;
        }
        if value < 0.0 {
            value = 0.0;
            clamped += 1;
        }
        samples.push(TraceSample {
            theta_rad: theta,
            value,
        });
    }
    let mut meta = TraceMeta::new(TraceKind::Measured, delta);
    meta.config_hash = cfg.fingerprint();
    meta.seed = noise.shot_noise.then_some(noise.seed);
    meta.clamped_samples = clamped;
    IntensityTrace::new(samples, meta)
}
