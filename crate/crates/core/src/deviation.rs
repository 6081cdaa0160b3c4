//! Overlap loss from angular deviation of a rotating image rotator.
//!
//! Rotating the rotator by `theta` walks the centre of the second beam around
//! a circle of radius `z tan(omega0)` through the first beam's centre. Both
//! beams are fundamental Gaussians `exp(-r^2 / w^2)`. Lengths are in
//! millimetres, angles in radians.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::trace::IntensityTrace;

/// Detection-plane distance used when none is given, in mm.
pub const DEFAULT_Z_MM: f64 = 250.0;
/// Beam radius at the detection plane used when none is given, in mm.
pub const DEFAULT_WAIST_MM: f64 = 0.4;

const AVERAGE_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationConfig {
    /// Maximum angular deviation, radians.
    pub omega0: f64,
    pub z: f64,
    pub waist: f64,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        Self {
            omega0: 0.0,
            z: DEFAULT_Z_MM,
            waist: DEFAULT_WAIST_MM,
        }
    }
}

impl DeviationConfig {
    pub fn new(omega0: f64, z: f64, waist: f64) -> Result<Self> {
        let cfg = Self { omega0, z, waist };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_omega0(self, omega0: f64) -> Self {
        Self { omega0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 >= 0.0 && self.omega0 < PI / 2.0) {
            return Err(Error::InvalidArgument(format!(
                "omega0 = {} must lie in [0, pi/2)",
                self.omega0
            )));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::InvalidArgument(format!("z = {} must be positive", self.z)));
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "waist = {} must be positive",
                self.waist
            )));
        }
        Ok(())
    }

    fn walk_radius(&self) -> f64 {
        self.z * self.omega0.tan()
    }
}

/// Centre of the deviated beam on the detection plane.
pub fn beam_center(theta: f64, cfg: &DeviationConfig) -> (f64, f64) {
    let r = cfg.walk_radius();
    (r * ((2.0 * theta).cos() - 1.0), r * (2.0 * theta).sin())
}

/// Distance between the two beam centres, `2 z tan(omega0) |sin theta|`.
pub fn center_offset(theta: f64, cfg: &DeviationConfig) -> f64 {
    let (x, y) = beam_center(theta, cfg);
    x.hypot(y)
}

/// Percentage overlap of two equal Gaussians displaced by `d(theta)`,
/// `100 exp(-d^2 / w^2)`.
pub fn overlap_percentage(theta: f64, cfg: &DeviationConfig) -> f64 {
    let d = center_offset(theta, cfg);
    100.0 * (-(d * d) / (cfg.waist * cfg.waist)).exp()
}

/// Square transverse grid for the direct overlap integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    pub points_per_axis: usize,
    /// Half-width around each beam centre, in waists.
    pub half_width_waists: f64,
}

impl Default for TransverseGrid {
    fn default() -> Self {
        Self {
            points_per_axis: 512,
            half_width_waists: 6.0,
        }
    }
}

/// Overlap percentage by direct summation of
/// `|int E1 E2*|^2 / (int |E1|^2 int |E2|^2)` on a uniform grid covering both beams.
///
/// Fails when the pixel pitch exceeds a quarter waist, which happens once the
/// beams separate by more than about a hundred waists.
pub fn overlap_percentage_numeric(theta: f64, cfg: &DeviationConfig, grid: TransverseGrid) -> Result<f64> {
    cfg.validate()?;
    let (xc, yc) = beam_center(theta, cfg);
    let w = cfg.waist;
    let half = grid.half_width_waists * w;
    let (x_lo, x_hi) = (xc.min(0.0) - half, xc.max(0.0) + half);
    let (y_lo, y_hi) = (yc.min(0.0) - half, yc.max(0.0) + half);
    let n = grid.points_per_axis;
    let hx = (x_hi - x_lo) / n as f64;
    let hy = (y_hi - y_lo) / n as f64;
    if n < 8 || hx.max(hy) > 0.25 * w {
        return Err(Error::Quadrature(format!(
            "transverse grid pitch {:.3e} mm too coarse for waist {w} mm",
            hx.max(hy)
        )));
    }
    let field = |x: f64, y: f64| (-(x * x + y * y) / (w * w)).exp();
    let (mut cross, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let x = x_lo + (i as f64 + 0.5) * hx;
        for j in 0..n {
            let y = y_lo + (j as f64 + 0.5) * hy;
            let e1 = field(x, y);
            let e2 = field(x - xc, y - yc);
            cross += e1 * e2;
            p1 += e1 * e1;
            p2 += e2 * e2;
        }
    }
    Ok(100.0 * cross * cross / (p1 * p2))
}

/// Mean of `A(theta) / 100` over one rotator period.
pub fn average_fractional_overlap(cfg: &DeviationConfig) -> Result<f64> {
    cfg.validate()?;
    let rule = GaussLegendre::new(AVERAGE_NODES);
    Ok(rule.integrate(0.0, PI, |t| overlap_percentage(t, cfg) / 100.0) / PI)
}

/// Waist that makes [`average_fractional_overlap`] equal `target_f` for the
/// given `omega0` and `z`.
pub fn fit_waist(omega0: f64, z: f64, target_f: f64) -> Result<f64> {
    if !(target_f > 0.0 && target_f < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target F = {target_f} must lie in (0, 1)"
        )));
    }
    if !(omega0 > 0.0) {
        return Err(Error::Degenerate("F = 1 for every waist when omega0 = 0".into()));
    }
    // F grows with the waist; bracket in log space
    let f_at = |w: f64| average_fractional_overlap(&DeviationConfig::new(omega0, z, w)?);
    let scale = z * omega0.tan();
    let (mut lo, mut hi) = ((scale * 1e-6).ln(), (scale * 1e6).ln());
    if f_at(lo.exp())? > target_f || f_at(hi.exp())? < target_f {
        return Err(Error::Degenerate(format!("target F = {target_f} not bracketed")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_at(mid.exp())? < target_f {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Scale the theta-dependent part of each sample by `sqrt(A(theta) / 100)`,
/// keeping `baseline` (the constant part of the trace) fixed.
pub fn degraded_trace(trace: &IntensityTrace, cfg: &DeviationConfig, baseline: f64) -> Result<IntensityTrace> {
    cfg.validate()?;
    trace.map_values(trace.meta.clone(), |theta, v| {
        baseline + (overlap_percentage(theta, cfg) / 100.0).sqrt() * (v - baseline)
    })
}
