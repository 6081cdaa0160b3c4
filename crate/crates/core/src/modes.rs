//! Laguerre-Gaussian mode numerics at the beam waist plane.
//!
//! Amplitudes follow the convention `LG^{|l|}_p(rho) * exp(-i l phi)` with unit
//! power normalization over the transverse plane. Angular integrals are never
//! discretized; only the radial factor goes through quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, QuadratureScheme};

/// Largest supported `p + |l|`; `171!` overflows an f64.
pub const MAX_FACTORIAL_ARG: u32 = 170;

/// Number of nodes in the default radial grid.
pub const DEFAULT_RADIAL_NODES: usize = 512;

/// OAM index `l` and radial index `p` of a Laguerre-Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l: i32,
    pub p: u32,
}

impl ModeIndex {
    pub const fn new(l: i32, p: u32) -> Self {
        Self { l, p }
    }

    pub fn abs_l(&self) -> u32 {
        self.l.unsigned_abs()
    }

    /// Radius (in waists) beyond which the mode's intensity is negligible,
    /// used by the grid-resolution heuristic.
    fn extent(&self) -> f64 {
        1f64.max(((self.abs_l() + 2 * self.p) as f64).sqrt())
    }
}

/// Associated Laguerre polynomial `L^l_p(x)` evaluated as its finite series.
///
/// Terms are generated by their ratio recurrence, then summed in order of
/// descending magnitude. Arguments with
/// `p + l > 170` are rejected.
pub fn assoc_laguerre(p: u32, l: u32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("laguerre argument {x} is not finite")));
    }
    if p + l > MAX_FACTORIAL_ARG {
        return Err(Error::OutOfRange(format!(
            "p + l = {} exceeds {MAX_FACTORIAL_ARG}",
            p + l
        )));
    }
    // Terms carry double-double precision: the alternating series cancels
    // heavily for large x, and plain f64 terms lose digits proportional to
    // the largest term.
    let n = p as usize + 1;
    let mut terms = [DoubleDouble::ZERO; MAX_FACTORIAL_ARG as usize + 1];
    // binom(p + l, p)
    let mut t = (1..=p).fold(DoubleDouble::ONE, |acc, i| {
        acc.mul_f64(f64::from(l + i)).div_f64(f64::from(i))
    });
    for (m, slot) in terms.iter_mut().take(n).enumerate() {
        *slot = t;
        let m = m as f64;
        t = t
            .mul_f64(-(f64::from(p) - m))
            .mul_f64(x)
            .div_f64((f64::from(l) + m + 1.0) * (m + 1.0));
    }
    let terms = &mut terms[..n];
    if terms.iter().any(|v| !v.hi.is_finite()) {
        return Err(Error::OutOfRange(format!("laguerre series overflow at x = {x}")));
    }
    terms.sort_unstable_by(|a, b| b.hi.abs().total_cmp(&a.hi.abs()));
    let sum = terms.iter().fold(DoubleDouble::ZERO, |acc, &v| acc.add(v));
    Ok(sum.to_f64())
}

/// Unevaluated sum `hi + lo` of two f64s, roughly 106 bits of significand.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let t = Self::two_sum(self.lo, other.lo);
        let r = Self::quick_two_sum(s.hi, s.lo + t.hi);
        Self::quick_two_sum(r.hi, r.lo + t.lo)
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let err = self.hi.mul_add(b, -p);
        Self::quick_two_sum(p, err + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        // remainder self - q1 * b, computed exactly for the leading part
        let r = self.add(Self {
            hi: -q1 * b,
            lo: -q1.mul_add(b, -(q1 * b)),
        });
        let q2 = r.hi / b;
        Self::quick_two_sum(q1, q2)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `ln(p! / (p + n)!)`
fn ln_factorial_ratio(p: u32, n: u32) -> f64 {
    -(1..=n).map(|i| f64::from(p + i).ln()).sum::<f64>()
}

/// Real radial factor `LG^{|l|}_p(rho)` of the waist-plane mode.
pub fn lg_radial(mode: ModeIndex, w0: f64, rho: f64) -> Result<f64> {
    if !(w0 > 0.0) || !w0.is_finite() {
        return Err(Error::InvalidArgument(format!("beam waist must be positive, got {w0}")));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be non-negative, got {rho}"
        )));
    }
    let l = mode.abs_l();
    let lag = assoc_laguerre(mode.p, l, 2.0 * rho * rho / (w0 * w0))?;
    if lag == 0.0 {
        return Ok(0.0);
    }
    if rho == 0.0 {
        if l > 0 {
            return Ok(0.0);
        }
        let norm = (2.0 / (PI * w0 * w0)).sqrt();
        return Ok(norm * lag);
    }
    // assemble in log space so large |l| does not overflow the power term
    let ln_norm = 0.5 * ((2.0 / (PI * w0 * w0)).ln() + ln_factorial_ratio(mode.p, l));
    let ln_mag =
        ln_norm + f64::from(l) * (std::f64::consts::SQRT_2 * rho / w0).ln() - rho * rho / (w0 * w0) + lag.abs().ln();
    Ok(lag.signum() * ln_mag.exp())
}

/// Complex waist-plane amplitude `LG^{|l|}_p(rho) exp(-i l phi)`.
pub fn lg_amplitude(mode: ModeIndex, w0: f64, rho: f64, phi: f64) -> Result<Complex64> {
    let radial = lg_radial(mode, w0, rho)?;
    Ok(Complex64::from_polar(radial, -f64::from(mode.l) * phi))
}

/// Discretization of `int_0^R (...) rho d rho` integrals.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    max_radius: f64,
    node_count: usize,
    scheme: QuadratureScheme,
    rule: GaussLegendre,
    // lower-order companion rule, used only for the error estimate
    coarse: GaussLegendre,
}

impl RadialGrid {
    pub fn new(max_radius: f64, node_count: usize) -> Result<Self> {
        if !(max_radius > 0.0) || !max_radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid radius must be positive, got {max_radius}"
            )));
        }
        if node_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes, got {node_count}"
            )));
        }
        Ok(Self {
            max_radius,
            node_count,
            scheme: QuadratureScheme::GaussLegendre,
            rule: GaussLegendre::new(node_count),
            coarse: GaussLegendre::new((3 * node_count / 4).max(1)),
        })
    }

    /// Default grid for a set of modes: radius `8 w0 (1 + sqrt(|l| + 2p))`
    /// taken over the widest mode, with 512 Gauss-Legendre nodes.
    pub fn default_for(modes: &[ModeIndex], w0: f64) -> Result<Self> {
        let widest = modes
            .iter()
            .map(|m| f64::from(m.abs_l() + 2 * m.p).sqrt())
            .fold(0.0, f64::max);
        Self::new(8.0 * w0 * (1.0 + widest), DEFAULT_RADIAL_NODES)
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    /// Whether the grid extends far enough to capture `mode`.
    pub fn resolves(&self, mode: ModeIndex, w0: f64) -> bool {
        self.max_radius >= 5.0 * w0 * mode.extent() && self.node_count >= 2
    }

    /// `int_0^R f(rho) d rho`. Callers include the `rho` Jacobian themselves.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        self.rule.integrate(0.0, self.max_radius, f)
    }

    /// Integral together with its difference from the coarse companion rule.
    pub fn integrate_with_error<F: FnMut(f64) -> f64>(&self, mut f: F) -> (f64, f64) {
        let fine = self.rule.integrate(0.0, self.max_radius, &mut f);
        let coarse = self.coarse.integrate(0.0, self.max_radius, &mut f);
        (fine, (fine - coarse).abs())
    }

    pub(crate) fn try_integrate<F: FnMut(f64) -> Result<f64>>(&self, mut f: F) -> Result<(f64, f64)> {
        let mut fine = 0.0;
        for (x, w) in self.rule.mapped(0.0, self.max_radius) {
            fine += w * f(x)?;
        }
        let mut coarse = 0.0;
        for (x, w) in self.coarse.mapped(0.0, self.max_radius) {
            coarse += w * f(x)?;
        }
        Ok((fine, (fine - coarse).abs()))
    }
}

/// Result of a numerical overlap integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: Complex64,
    /// Difference against a lower-order rule on the same interval.
    pub error_estimate: f64,
}

/// `int int [LG_a]* LG_b rho d rho d phi` with the azimuthal integral taken
/// analytically as `2 pi delta(l_a, l_b)`.
pub fn mode_overlap(a: ModeIndex, b: ModeIndex, w0: f64, grid: &RadialGrid) -> Result<Overlap> {
    for m in [a, b] {
        if !grid.resolves(m, w0) {
            return Err(Error::Quadrature(format!(
                "radius {} does not resolve mode (l={}, p={}) at w0 = {w0}",
                grid.max_radius(),
                m.l,
                m.p
            )));
        }
    }
    if a.l != b.l {
        return Ok(Overlap {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
        });
    }
    let (radial, err) = grid.try_integrate(|rho| Ok(lg_radial(a, w0, rho)? * lg_radial(b, w0, rho)? * rho))?;
    Ok(Overlap {
        value: Complex64::new(2.0 * PI * radial, 0.0),
        error_estimate: 2.0 * PI * err,
    })
}
