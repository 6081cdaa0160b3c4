//! Truncated single-photon OAM states and their spectra.
//!
//! A state lives on the basis `|l, p>` with `l` in `[-N, N]` and `p` in
//! `[0, P)`; basis index `(l + N) * P + p`. Density matrices are stored dense.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the unit-trace, Hermiticity and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Largest spectral mass a truncated Gaussian state may leave outside `[-N, N]`.
pub const MAX_TAIL_LEAKAGE: f64 = 1e-6;

/// Normalized OAM spectrum `S_l` for `l` in `[-N, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    values: Vec<f64>,
}

impl Spectrum {
    /// Wrap already-normalized values ordered from `l = -N` to `l = N`.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * n + 1 {
            return Err(Error::InvalidSpectrum(format!(
                "expected {} values for N = {n}, got {}",
                2 * n + 1,
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "S_{} = {v} is not a non-negative number",
                i as i64 - n as i64
            )));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidSpectrum(format!("values sum to {total}, not 1")));
        }
        Ok(Self { n, values })
    }

    /// Normalize non-negative weights into a spectrum.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidSpectrum(format!("weights sum to {total}")));
        }
        Self::new(n, weights.into_iter().map(|w| w / total).collect())
    }

    /// Build from `(l, weight)` pairs; missing `l` are zero, weights are normalized.
    pub fn from_pairs(n: usize, pairs: &[(i32, f64)]) -> Result<Self> {
        let mut w = vec![0.0; 2 * n + 1];
        for &(l, s) in pairs {
            let idx = l_index(n, l).ok_or_else(|| Error::InvalidSpectrum(format!("l = {l} outside [-{n}, {n}]")))?;
            w[idx] += s;
        }
        Self::from_weights(n, w)
    }

    /// Gaussian spectrum `S_l ~ exp(-l^2 / (2 sigma^2))` truncated to `[-N, N]`.
    pub fn gaussian(sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let w = (-(n as i64)..=n as i64)
            .map(|l| (-(l * l) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        Self::from_weights(n, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Values ordered from `l = -N` to `l = N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `S_l`, zero outside the truncation.
    pub fn get(&self, l: i32) -> f64 {
        l_index(self.n, l).map_or(0.0, |i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        let n = self.n as i32;
        self.values.iter().enumerate().map(move |(i, &s)| (i as i32 - n, s))
    }

    /// `(S_l + S_{-l}) / 2`
    pub fn symmetrized(&self) -> Self {
        let values = (0..self.values.len())
            .map(|i| 0.5 * (self.values[i] + self.values[self.values.len() - 1 - i]))
            .collect();
        Self { n: self.n, values }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.iter().all(|(l, s)| (s - self.get(-l)).abs() <= tol)
    }

    /// Re-express on a wider (or equal) truncation, padding with zeros.
    pub fn widened(&self, n: usize) -> Result<Self> {
        if n < self.n {
            let dropped: f64 = self
                .iter()
                .filter(|(l, _)| l.unsigned_abs() as usize > n)
                .map(|(_, s)| s)
                .sum();
            if dropped > 0.0 {
                return Err(Error::DimensionMismatch(format!(
                    "cannot narrow spectrum from N = {} to N = {n} with mass {dropped} outside",
                    self.n
                )));
            }
        }
        let mut values = vec![0.0; 2 * n + 1];
        for (l, s) in self.iter() {
            if let Some(i) = l_index(n, l) {
                values[i] = s;
            }
        }
        Ok(Self { n, values })
    }

    /// Largest `|S_l - other_l|` over the union of both truncations.
    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        let n = self.n.max(other.n) as i32;
        (-n..=n).map(|l| (self.get(l) - other.get(l)).abs()).fold(0.0, f64::max)
    }
}

/// Position of `l` in a `[-N, N]` vector.
pub fn l_index(n: usize, l: i32) -> Option<usize> {
    let idx = l as i64 + n as i64;
    (0..=2 * n as i64).contains(&idx).then_some(idx as usize)
}

/// One `{l, s}` record of the JSON spectrum encoding.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub l: i32,
    pub s: f64,
}

impl Serialize for Spectrum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<SpectrumEntry> = self.iter().map(|(l, s)| SpectrumEntry { l, s }).collect();
        entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Spectrum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<SpectrumEntry>::deserialize(deserializer)?;
        let n = entries.iter().map(|e| e.l.unsigned_abs() as usize).max().unwrap_or(0);
        let mut values = vec![0.0; 2 * n + 1];
        for e in &entries {
            values[(e.l as i64 + n as i64) as usize] += e.s;
        }
        Spectrum::new(n, values).map_err(serde::de::Error::custom)
    }
}

/// Density matrix `C^{p1,p2}_{l1,l2}` of a truncated OAM state.
#[derive(Debug, Clone, PartialEq)]
pub struct OamState {
    n: usize,
    radial: usize,
    rho: DMatrix<Complex64>,
}

impl OamState {
    /// Wrap a density matrix after checking Hermiticity, unit trace and
    /// positivity.
    pub fn from_density_matrix(n: usize, radial: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        let state = Self::from_parts_unchecked(n, radial, rho)?;
        state.validate()?;
        Ok(state)
    }

    fn from_parts_unchecked(n: usize, radial: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        if radial == 0 {
            return Err(Error::InvalidArgument("radial truncation P must be at least 1".into()));
        }
        let dim = (2 * n + 1) * radial;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{}, expected {dim}x{dim} for N = {n}, P = {radial}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(Self { n, radial, rho })
    }

    /// Rank-one state `|a><a| / <a|a>`.
    pub fn pure(n: usize, radial: usize, amplitudes: &DVector<Complex64>) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::InvalidState("pure state amplitudes have zero norm".into()));
        }
        let a = amplitudes.unscale(norm2.sqrt());
        let rho = &a * a.adjoint();
        Self::from_parts_unchecked(n, radial, rho)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Radial truncation `P`.
    pub fn radial(&self) -> usize {
        self.radial
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn density_matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// Basis position of `|l, p>`.
    pub fn index(&self, l: i32, p: usize) -> Option<usize> {
        if p >= self.radial {
            return None;
        }
        l_index(self.n, l).map(|i| i * self.radial + p)
    }

    /// `C^{p1,p2}_{l1,l2}`
    pub fn coefficient(&self, l1: i32, p1: usize, l2: i32, p2: usize) -> Complex64 {
        match (self.index(l1, p1), self.index(l2, p2)) {
            (Some(i), Some(j)) => self.rho[(i, j)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Check Hermiticity, unit trace and positive semidefiniteness within
    /// [`STATE_TOLERANCE`].
    pub fn validate(&self) -> Result<()> {
        let herm = (&self.rho - self.rho.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
        }
        let min_eig = self
            .rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    /// Whether any population sits on `|l| = N`, where truncation may be hiding
    /// support beyond the modelled range.
    pub fn has_edge_support(&self, tol: f64) -> bool {
        let n = self.n as i32;
        (0..self.radial).any(|p| [n, -n].iter().any(|&l| self.coefficient(l, p, l, p).re > tol))
    }

    pub fn spectrum(&self) -> Spectrum {
        let values = (0..2 * self.n + 1)
            .map(|i| {
                (0..self.radial)
                    .map(|p| {
                        let k = i * self.radial + p;
                        self.rho[(k, k)].re
                    })
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect();
        Spectrum { n: self.n, values }
    }

    /// `Tr rho^2`, computed as the squared Frobenius norm of the Hermitian matrix.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Apply `rho -> U rho U^dagger` for a unitary on the same basis.
    pub(crate) fn conjugated_by(&self, u: &DMatrix<Complex64>) -> Self {
        Self {
            n: self.n,
            radial: self.radial,
            rho: u * &self.rho * u.adjoint(),
        }
    }
}

/// Pure state with `p = 0` and real amplitudes `a_l ~ exp(-l^2 / (4 sigma^2))`,
/// giving a Gaussian spectrum of standard deviation `sigma`.
///
/// Fails when more than [`MAX_TAIL_LEAKAGE`] of the untruncated spectrum
/// would fall outside `[-N, N]`.
pub fn gaussian_pure_state(sigma: f64, n: usize) -> Result<OamState> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let weight = |l: f64| (-l * l / (2.0 * sigma * sigma)).exp();
    let inside: f64 = (-(n as i64)..=n as i64).map(|l| weight(l as f64)).sum();
    let mut tail = 0.0;
    let mut l = n as f64 + 1.0;
    loop {
        let w = weight(l);
        tail += 2.0 * w;
        if w < 1e-18 * inside {
            break;
        }
        l += 1.0;
    }
    let leak = tail / (inside + tail);
    if leak > MAX_TAIL_LEAKAGE {
        return Err(Error::InvalidArgument(format!(
            "N = {n} truncates {leak:e} of a sigma = {sigma} Gaussian spectrum"
        )));
    }
    let amps = DVector::from_iterator(
        2 * n + 1,
        (-(n as i64)..=n as i64).map(|l| {
            let l = l as f64;
            Complex64::new((-l * l / (4.0 * sigma * sigma)).exp(), 0.0)
        }),
    );
    OamState::pure(n, 1, &amps)
}

/// Convex combination of density matrices.
pub fn mix_states(parts: &[(OamState, f64)]) -> Result<OamState> {
    let (first, _) = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("mixture needs at least one part".into()))?;
    let total: f64 = parts.iter().map(|(_, w)| *w).sum();
    if (total - 1.0).abs() > STATE_TOLERANCE {
        return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
    }
    if let Some((_, w)) = parts.iter().find(|(_, w)| !(*w > 0.0)) {
        return Err(Error::InvalidArgument(format!("mixture weight {w} is not positive")));
    }
    let (n, radial) = (first.n, first.radial);
    let mut rho = DMatrix::zeros(first.dim(), first.dim());
    for (state, w) in parts {
        if state.n != n || state.radial != radial {
            return Err(Error::DimensionMismatch(format!(
                "mixture parts have (N, P) = ({n}, {radial}) and ({}, {})",
                state.n, state.radial
            )));
        }
        rho += state.rho.scale(*w);
    }
    OamState::from_parts_unchecked(n, radial, rho)
}

/// Equal-amplitude `p = 0` superposition over the listed OAM indices.
pub fn comb_state(ls: &[i32], n: usize) -> Result<OamState> {
    if ls.is_empty() {
        return Err(Error::InvalidArgument("comb needs at least one mode".into()));
    }
    let mut amps = DVector::from_element(2 * n + 1, Complex64::new(0.0, 0.0));
    for &l in ls {
        let i = l_index(n, l).ok_or_else(|| Error::InvalidArgument(format!("l = {l} outside [-{n}, {n}]")))?;
        if amps[i].re != 0.0 {
            return Err(Error::InvalidArgument(format!("l = {l} listed twice")));
        }
        amps[i] = Complex64::new(1.0, 0.0);
    }
    OamState::pure(n, 1, &amps)
}

/// State diagonal in both `l` and `p` with `C^{p,p}_{l,l} = S_l w_p`.
pub fn diagonal_state(spectrum: &Spectrum, radial_weights: &[f64]) -> Result<OamState> {
    if radial_weights.is_empty() {
        return Err(Error::InvalidArgument("radial weights are empty".into()));
    }
    if let Some(w) = radial_weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidArgument(format!("radial weight {w} is negative")));
    }
    let total: f64 = radial_weights.iter().sum();
    if (total - 1.0).abs() > STATE_TOLERANCE {
        return Err(Error::InvalidArgument(format!("radial weights sum to {total}, not 1")));
    }
    let radial = radial_weights.len();
    let n = spectrum.n();
    let diag = DVector::from_iterator(
        (2 * n + 1) * radial,
        spectrum
            .values()
            .iter()
            .flat_map(|s| radial_weights.iter().map(move |w| Complex64::new(s * w, 0.0))),
    );
    OamState::from_parts_unchecked(n, radial, DMatrix::from_diagonal(&diag))
}

pub fn spectrum_of(state: &OamState) -> Spectrum {
    state.spectrum()
}

pub fn purity(state: &OamState) -> f64 {
    state.purity()
}

/// JSON encoding of a state: dimensions plus row-major `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OamStateRecord {
    pub n: usize,
    pub radial: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&OamState> for OamStateRecord {
    fn from(state: &OamState) -> Self {
        let dim = state.dim();
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| {
                let c = state.rho[(i, j)];
                [c.re, c.im]
            })
            .collect();
        Self {
            n: state.n,
            radial: state.radial,
            entries,
        }
    }
}

impl TryFrom<OamStateRecord> for OamState {
    type Error = Error;

    fn try_from(rec: OamStateRecord) -> Result<Self> {
        let dim = (2 * rec.n + 1) * rec.radial;
        if rec.entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                rec.entries.len()
            )));
        }
        let rho = DMatrix::from_row_iterator(dim, dim, rec.entries.iter().map(|[re, im]| Complex64::new(*re, *im)));
        OamState::from_density_matrix(rec.n, rec.radial, rho)
    }
}

impl Serialize for OamState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        OamStateRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OamState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = OamStateRecord::deserialize(deserializer)?;
        OamState::try_from(rec).map_err(serde::de::Error::custom)
    }
}

/// Radial weights keyed by `p`, as read from configuration files.
pub fn radial_weights_from_map(map: &BTreeMap<usize, f64>) -> Vec<f64> {
    let len = map.keys().next_back().map_or(0, |p| p + 1);
    (0..len).map(|p| map.get(&p).copied().unwrap_or(0.0)).collect()
}
