//! Intensity traces: ordered `(theta, value)` samples plus provenance.
//!
//! On disk a trace is a headered CSV (`theta_rad,value`) with a JSON sidecar
//! holding [`TraceMeta`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing theta grids of two traces.
pub const GRID_TOLERANCE: f64 = 1e-12;

/// What a trace holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// Detection probability at one phase setting; non-negative.
    Measured,
    /// Difference of two measured traces.
    Difference,
    /// Difference divided by `cos(psi(theta))`.
    PolarizationCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub kind: TraceKind,
    /// Phase setting of the shot (the minuend for difference traces).
    pub delta: f64,
    /// Phase of the subtracted shot, for difference traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ref: Option<f64>,
    /// SHA-256 of the interferometer configuration that produced the trace.
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Samples that came out negative after noise and were clamped to zero.
    #[serde(default)]
    pub clamped_samples: usize,
    pub tool_version: String,
}

impl TraceMeta {
    pub fn new(kind: TraceKind, delta: f64) -> Self {
        Self {
            kind,
            delta,
            delta_ref: None,
            config_hash: String::new(),
            seed: None,
            clamped_samples: 0,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub theta_rad: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    samples: Vec<TraceSample>,
    pub meta: TraceMeta,
}

impl IntensityTrace {
    /// Theta must be finite and strictly increasing; measured values must be
    /// non-negative.
    pub fn new(samples: Vec<TraceSample>, meta: TraceMeta) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("trace has no samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].theta_rad > w[0].theta_rad) {
                return Err(Error::InvalidArgument(format!(
                    "theta not strictly increasing at {} -> {}",
                    w[0].theta_rad, w[1].theta_rad
                )));
            }
        }
        for s in &samples {
            if !s.theta_rad.is_finite() || !s.value.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite sample {s:?}")));
            }
            if meta.kind == TraceKind::Measured && s.value < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "negative detection probability {} at theta = {}",
                    s.value, s.theta_rad
                )));
            }
        }
        Ok(Self { samples, meta })
    }

    pub fn from_columns(thetas: &[f64], values: &[f64], meta: TraceMeta) -> Result<Self> {
        if thetas.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} thetas and {} values",
                thetas.len(),
                values.len()
            )));
        }
        let samples = thetas
            .iter()
            .zip(values)
            .map(|(&theta_rad, &value)| TraceSample { theta_rad, value })
            .collect();
        Self::new(samples, meta)
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta_rad).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    /// New trace on the same grid with values mapped by `f(theta, value)`.
    pub fn map_values<F: FnMut(f64, f64) -> f64>(&self, meta: TraceMeta, mut f: F) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| TraceSample {
                theta_rad: s.theta_rad,
                value: f(s.theta_rad, s.value),
            })
            .collect();
        Self::new(samples, meta)
    }

    /// Error unless both traces sample the same thetas.
    pub fn check_same_grid(&self, other: &IntensityTrace) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples vs {} samples",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if (a.theta_rad - b.theta_rad).abs() > GRID_TOLERANCE {
                return Err(Error::GridMismatch(format!("theta {} vs {}", a.theta_rad, b.theta_rad)));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, meta: TraceMeta) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let samples = r.deserialize().collect::<std::result::Result<Vec<TraceSample>, _>>()?;
        Self::new(samples, meta)
    }

    pub fn write_sidecar<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.meta)?;
        Ok(())
    }

    pub fn read_sidecar<R: Read>(reader: R) -> Result<TraceMeta> {
        Ok(serde_json::from_reader(reader)?)
    }
}
