//! Spectrum recovery from intensity traces.
//!
//! The two-shot protocol subtracts traces taken at `delta = 0` and `delta = pi`,
//! divides out `cos psi(theta)` and projects onto `cos(2 l theta)`; it assumes
//! `S_l = S_{-l}`. The four-shot protocol adds the `3 pi / 2` and `pi / 2`
//! shots and projects the complex combination onto `exp(-2 i l theta)`, which
//! recovers asymmetric spectra.
//!
//! Projections use the periodic trapezoid rule on theta folded into `[0, pi)`.
//! On a uniform grid of `2N + 1` points the discrete cosines are exactly
//! orthogonal, so noiseless inputs with support in `[-N, N]` are recovered to
//! rounding error.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::PolarizationCurve;
use crate::states::Spectrum;
use crate::trace::{IntensityTrace, TraceKind, TraceMeta};

/// Smallest `cos psi` accepted by [`polarization_correct`].
pub const POLARIZATION_EPSILON: f64 = 1e-3;

/// Relative slack allowed on the sampling bound (rounding of grid angles).
const NYQUIST_SLACK: f64 = 1e-9;

/// `difference = trace_c - trace_d` on a shared theta grid.
pub fn difference_trace(trace_c: &IntensityTrace, trace_d: &IntensityTrace) -> Result<IntensityTrace> {
    trace_c.check_same_grid(trace_d)?;
    let mut meta = TraceMeta::new(TraceKind::Difference, trace_c.meta.delta);
    meta.delta_ref = Some(trace_d.meta.delta);
    meta.config_hash = trace_c.meta.config_hash.clone();
    meta.seed = trace_c.meta.seed;
    let d = trace_d.samples();
    let mut k = 0;
    trace_c.map_values(meta, |_, v| {
        let out = v - d[k].value;
        k += 1;
        out
    })
}

/// Divide a difference trace by `cos psi(theta)` sample by sample.
pub fn polarization_correct(diff: &IntensityTrace, curve: &PolarizationCurve) -> Result<IntensityTrace> {
    polarization_correct_with(diff, curve, POLARIZATION_EPSILON)
}

pub fn polarization_correct_with(
    diff: &IntensityTrace,
    curve: &PolarizationCurve,
    epsilon: f64,
) -> Result<IntensityTrace> {
    curve.validate()?;
    if let Some(s) = diff.samples().iter().find(|s| curve.cos_psi(s.theta_rad) <= epsilon) {
        return Err(Error::PolarizationSingular {
            theta: s.theta_rad,
            cos_psi: curve.cos_psi(s.theta_rad),
        });
    }
    let mut meta = diff.meta.clone();
    meta.kind = TraceKind::PolarizationCorrected;
    diff.map_values(meta, |theta, v| v / curve.cos_psi(theta))
}

/// Sampling requirement for spectra supported on `|l| <= l_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub l_max: usize,
    /// Largest admissible theta step, `pi / (2 l_max + 1)`.
    pub max_step: f64,
    /// `2 l_max + 1` samples over one period.
    pub min_samples: usize,
    /// The looser `2 l_max` point count sometimes quoted for this bound.
    pub advisory_min_points: usize,
}

impl SamplingPlan {
    /// Uniform grid `k pi / (2 l_max + 1)` on `[0, pi)`.
    pub fn uniform_grid(&self) -> Vec<f64> {
        uniform_grid(self.min_samples)
    }
}

pub fn plan_sampling(l_max: usize) -> Result<SamplingPlan> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("l_max must be at least 1".into()));
    }
    let min_samples = 2 * l_max + 1;
    Ok(SamplingPlan {
        l_max,
        max_step: PI / min_samples as f64,
        min_samples,
        advisory_min_points: 2 * l_max,
    })
}

/// `samples` equally spaced angles on `[0, pi)`.
pub fn uniform_grid(samples: usize) -> Vec<f64> {
    (0..samples).map(|k| k as f64 * PI / samples as f64).collect()
}

/// Grid on `[-pi/2, pi/2)`: `fine_step` inside `|theta| <= fine_half_width`,
/// `coarse_step` elsewhere. All arguments in radians.
pub fn piecewise_grid(fine_step: f64, fine_half_width: f64, coarse_step: f64) -> Result<Vec<f64>> {
    if !(fine_step > 0.0 && coarse_step > 0.0 && (0.0..PI / 2.0).contains(&fine_half_width)) {
        return Err(Error::InvalidArgument(format!(
            "bad piecewise grid ({fine_step}, {fine_half_width}, {coarse_step})"
        )));
    }
    let mut grid = Vec::new();
    let fine_n = (fine_half_width / fine_step).round() as i64;
    let mut theta = -fine_n as f64 * fine_step;
    // coarse points below the fine window, walking down from its edge
    let mut below = Vec::new();
    let mut t = theta - coarse_step;
    while t >= -PI / 2.0 - 1e-12 {
        below.push(t);
        t -= coarse_step;
    }
    below.reverse();
    grid.extend(below);
    for k in 0..=2 * fine_n {
        grid.push((k - fine_n) as f64 * fine_step);
    }
    theta = fine_n as f64 * fine_step + coarse_step;
    // stop short of the point that coincides with -pi/2 one period later
    while theta < PI / 2.0 - 1e-12 && theta - PI < grid[0] - 1e-12 {
        grid.push(theta);
        theta += coarse_step;
    }
    Ok(grid)
}

/// Which protocol produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    TwoShot,
    FourShot,
}

/// Knobs for the projection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    /// Reject grids whose largest step exceeds `pi / (2N + 1)`.
    pub enforce_nyquist: bool,
    /// Constant multiplying every projection integral; cancels on normalization.
    pub projection_scale: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            enforce_nyquist: true,
            projection_scale: 1.0,
        }
    }
}

/// `(l, value)` record used for unnormalized projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeValue {
    pub l: i32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Total of the negative projections set to zero before normalization,
    /// relative to the normalization sum.
    pub clipped_mass: f64,
    pub clipped_modes: Vec<i32>,
    /// Largest `|Im S_l|` relative to the largest `|Re S_l|` (four-shot only).
    pub imaginary_residue: f64,
    pub samples: usize,
    pub max_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub spectrum: Spectrum,
    /// Unnormalized projections.
    pub raw_sbar: Vec<ModeValue>,
    /// Coefficient of determination in percent, when a reference is attached.
    pub r_squared: Option<f64>,
    pub protocol: Protocol,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    /// Attach the standard R^2 against a known input spectrum.
    pub fn with_reference(mut self, input: &Spectrum) -> Self {
        self.r_squared = r_squared(&self.spectrum, input, RSquaredForm::Standard);
        self
    }
}

/// Trapezoid weights on theta folded into `[0, pi)`, plus the largest gap.
struct PeriodicQuadrature {
    thetas: Vec<f64>,
    weights: Vec<f64>,
    order: Vec<usize>,
    max_step: f64,
}

impl PeriodicQuadrature {
    fn new(thetas: &[f64]) -> Result<Self> {
        let mut folded: Vec<(f64, usize)> = thetas.iter().enumerate().map(|(i, t)| (t.rem_euclid(PI), i)).collect();
        folded.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = folded.len();
        if m < 2 {
            return Err(Error::InvalidArgument("need at least two theta samples".into()));
        }
        let gap = |k: usize| -> f64 {
            if k + 1 < m {
                folded[k + 1].0 - folded[k].0
            } else {
                folded[0].0 + PI - folded[m - 1].0
            }
        };
        let mut max_step: f64 = 0.0;
        let mut weights = Vec::with_capacity(m);
        for (k, f) in folded.iter().enumerate() {
            let g = gap(k);
            if g <= 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "theta samples coincide modulo pi near {}",
                    f.0
                )));
            }
            max_step = max_step.max(g);
            weights.push(0.5 * (gap(k) + gap((k + m - 1) % m)));
        }
        Ok(Self {
            thetas: folded.iter().map(|f| f.0).collect(),
            weights,
            order: folded.iter().map(|f| f.1).collect(),
            max_step,
        })
    }

    fn check_nyquist(&self, l_max: usize) -> Result<()> {
        let plan = plan_sampling(l_max.max(1))?;
        if self.max_step > plan.max_step * (1.0 + NYQUIST_SLACK) {
            return Err(Error::Undersampled {
                l_max,
                step_deg: self.max_step.to_degrees(),
                max_step_deg: plan.max_step.to_degrees(),
            });
        }
        Ok(())
    }

    /// Values reordered to match the folded angles.
    fn reorder(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| values[i]).collect()
    }
}

/// Clip negatives, normalize, and assemble the result.
fn finish(
    raw: Vec<f64>,
    n: usize,
    protocol: Protocol,
    quad: &PeriodicQuadrature,
    imaginary_residue: f64,
) -> Result<ReconstructionResult> {
    let ni = n as i32;
    let positive_total: f64 = raw.iter().filter(|v| **v > 0.0).sum();
    if !(positive_total > 0.0) {
        return Err(Error::Degenerate(
            "all projections are non-positive; no fringe signal".into(),
        ));
    }
    let mut clipped_modes = Vec::new();
    let mut clipped = 0.0;
    let weights: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v < 0.0 {
                clipped_modes.push(i as i32 - ni);
                clipped -= v;
                0.0
            } else {
                v
            }
        })
        .collect();
    let spectrum = Spectrum::from_weights(n, weights)?;
    Ok(ReconstructionResult {
        spectrum,
        raw_sbar: raw
            .iter()
            .enumerate()
            .map(|(i, &value)| ModeValue {
                l: i as i32 - ni,
                value,
            })
            .collect(),
        r_squared: None,
        protocol,
        diagnostics: Diagnostics {
            clipped_mass: clipped / positive_total,
            clipped_modes,
            imaginary_residue,
            samples: quad.thetas.len(),
            max_step: quad.max_step,
        },
    })
}

/// Symmetric-spectrum recovery from a polarization-corrected difference trace.
///
/// An asymmetric input folds onto `(S_l + S_{-l}) / 2`; two shots cannot tell
/// the difference.
pub fn two_shot_spectrum(diff_corrected: &IntensityTrace, n: usize) -> Result<ReconstructionResult> {
    two_shot_spectrum_with(diff_corrected, n, ReconstructOptions::default())
}

pub fn two_shot_spectrum_with(
    diff_corrected: &IntensityTrace,
    n: usize,
    opts: ReconstructOptions,
) -> Result<ReconstructionResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let quad = PeriodicQuadrature::new(&diff_corrected.thetas())?;
    if opts.enforce_nyquist {
        quad.check_nyquist(n)?;
    }
    let values = quad.reorder(&diff_corrected.values());
    let half: Vec<f64> = (0..=n)
        .map(|l| {
            let lf = 2.0 * l as f64;
            opts.projection_scale
                * quad
                    .thetas
                    .iter()
                    .zip(&quad.weights)
                    .zip(&values)
                    .map(|((t, w), v)| w * v * (lf * t).cos())
                    .sum::<f64>()
        })
        .collect();
    let raw: Vec<f64> = (0..2 * n + 1)
        .map(|i| half[(i as i64 - n as i64).unsigned_abs() as usize])
        .collect();
    finish(raw, n, Protocol::TwoShot, &quad, 0.0)
}

/// Convenience: difference, polarization correction and two-shot projection.
pub fn two_shot_from_traces(
    trace_c: &IntensityTrace,
    trace_d: &IntensityTrace,
    curve: &PolarizationCurve,
    n: usize,
) -> Result<ReconstructionResult> {
    let diff = difference_trace(trace_c, trace_d)?;
    two_shot_spectrum(&polarization_correct(&diff, curve)?, n)
}

/// Nominal phase settings of the four shots, in the order expected by
/// [`four_shot_spectrum`].
pub const FOUR_SHOT_DELTAS: [f64; 4] = [0.0, PI, 1.5 * PI, 0.5 * PI];

fn same_phase(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d) < 1e-6
}

/// Recovery of arbitrary spectra from measured traces at
/// `delta = 0, pi, 3 pi / 2, pi / 2` (in that order).
pub fn four_shot_spectrum(
    traces: [&IntensityTrace; 4],
    curve: &PolarizationCurve,
    n: usize,
) -> Result<ReconstructionResult> {
    four_shot_spectrum_with(traces, curve, n, ReconstructOptions::default())
}

pub fn four_shot_spectrum_with(
    traces: [&IntensityTrace; 4],
    curve: &PolarizationCurve,
    n: usize,
    opts: ReconstructOptions,
) -> Result<ReconstructionResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    for (t, &expected) in traces.iter().zip(&FOUR_SHOT_DELTAS) {
        if !same_phase(t.meta.delta, expected) {
            return Err(Error::InvalidArgument(format!(
                "four-shot traces must be ordered delta = 0, pi, 3pi/2, pi/2; got {} where {expected} expected",
                t.meta.delta
            )));
        }
    }
    for t in &traces[1..] {
        traces[0].check_same_grid(t)?;
    }
    let real = polarization_correct(&difference_trace(traces[0], traces[1])?, curve)?;
    let imag = polarization_correct(&difference_trace(traces[2], traces[3])?, curve)?;
    let quad = PeriodicQuadrature::new(&real.thetas())?;
    if opts.enforce_nyquist {
        quad.check_nyquist(n)?;
    }
    let re_vals = quad.reorder(&real.values());
    let im_vals = quad.reorder(&imag.values());
    let ni = n as i32;
    let projections: Vec<Complex64> = (-ni..=ni)
        .map(|l| {
            let lf = 2.0 * f64::from(l);
            let sum: Complex64 = quad
                .thetas
                .iter()
                .zip(&quad.weights)
                .zip(re_vals.iter().zip(&im_vals))
                .map(|((t, w), (a, b))| Complex64::new(*a, *b) * Complex64::from_polar(*w, -lf * t))
                .sum();
            sum * opts.projection_scale
        })
        .collect();
    let max_re = projections.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let max_im = projections.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let residue = if max_re > 0.0 { max_im / max_re } else { f64::INFINITY };
    finish(
        projections.iter().map(|c| c.re).collect(),
        n,
        Protocol::FourShot,
        &quad,
        residue,
    )
}

/// Which expression of the coefficient of determination to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RSquaredForm {
    /// `100 (1 - SSE / SS_tot)`
    #[default]
    Standard,
    /// `100 SSE / SS_tot`, the ratio itself.
    Literal,
}

/// Coefficient of determination in percent over the union of both
/// truncations. `None` when the input spectrum has zero variance.
pub fn r_squared(observed: &Spectrum, input: &Spectrum, form: RSquaredForm) -> Option<f64> {
    let n = observed.n().max(input.n()) as i32;
    let count = f64::from(2 * n + 1);
    let mean = (-n..=n).map(|l| input.get(l)).sum::<f64>() / count;
    let ss_tot: f64 = (-n..=n).map(|l| (input.get(l) - mean).powi(2)).sum();
    // a flat spectrum leaves only rounding residue in ss_tot
    if ss_tot <= 1e-24 * mean * mean * count {
        return None;
    }
    let sse: f64 = (-n..=n).map(|l| (observed.get(l) - input.get(l)).powi(2)).sum();
    Some(match form {
        RSquaredForm::Standard => 100.0 * (1.0 - sse / ss_tot),
        RSquaredForm::Literal => 100.0 * sse / ss_tot,
    })
}

/// Per-mode detection efficiency `kappa S_ob / S_in` in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub per_mode: Vec<ModeValue>,
    /// Modes whose input weight was below the threshold.
    pub skipped: Vec<i32>,
}

pub const DEFAULT_EFFICIENCY_THRESHOLD: f64 = 1e-4;

pub fn detection_efficiency(
    observed: &Spectrum,
    input: &Spectrum,
    kappa: f64,
    threshold: f64,
) -> Result<EfficiencyReport> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} outside (0, 1]")));
    }
    let n = observed.n().max(input.n()) as i32;
    let mut per_mode = Vec::new();
    let mut skipped = Vec::new();
    for l in -n..=n {
        let s_in = input.get(l);
        if s_in > threshold {
            per_mode.push(ModeValue {
                l,
                value: 100.0 * kappa * observed.get(l) / s_in,
            });
        } else {
            skipped.push(l);
        }
    }
    Ok(EfficiencyReport { per_mode, skipped })
}

/// Least-squares fit of `I = a + b cos 2(beta - c)` to half-wave-plate scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    pub a: f64,
    pub b: f64,
    /// Orientation of maximum intensity in `[0, pi)`; the `delta ~ 0` setting.
    pub c: f64,
    /// `c + pi/2` folded into `[0, pi)`; the `delta ~ pi` setting.
    pub beta_destructive: f64,
    pub residual_rms: f64,
}

impl PhaseCalibration {
    pub fn beta_constructive(&self) -> f64 {
        self.c
    }
}

/// Fit via the linear form `a + p cos 2 beta + q sin 2 beta`. Needs at least
/// three orientations distinct modulo 180 degrees, and a visible fringe.
pub fn fit_phase_calibration(measurements: &[(f64, f64)]) -> Result<PhaseCalibration> {
    let mut distinct: Vec<f64> = measurements.iter().map(|(b, _)| b.rem_euclid(PI)).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if distinct.len() >= 2 && distinct[0] + PI - distinct[distinct.len() - 1] < 1e-9 {
        distinct.pop();
    }
    if distinct.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 half-wave-plate angles distinct modulo 180 deg, got {}",
            distinct.len()
        )));
    }
    let m = measurements.len();
    let design = DMatrix::from_fn(m, 3, |i, j| {
        let b = 2.0 * measurements[i].0;
        match j {
            0 => 1.0,
            1 => b.cos(),
            _ => b.sin(),
        }
    });
    let y = DVector::from_iterator(m, measurements.iter().map(|(_, i)| *i));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let (a, p, q) = (coef[0], coef[1], coef[2]);
    let b = p.hypot(q);
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if b <= 1e-9 * scale {
        return Err(Error::Degenerate(
            "no fringe: fitted amplitude is zero, c undefined".into(),
        ));
    }
    let c = (0.5 * q.atan2(p)).rem_euclid(PI);
    let resid = &y - &design * &coef;
    Ok(PhaseCalibration {
        a,
        b,
        c,
        beta_destructive: (c + PI / 2.0).rem_euclid(PI),
        residual_rms: (resid.norm_squared() / m as f64).sqrt(),
    })
}
