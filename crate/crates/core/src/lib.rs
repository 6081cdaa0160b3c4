//! Simulation of a rotating-interferometer orbital-angular-momentum (OAM)
//! spectrometer, and reconstruction of OAM spectra from its intensity traces.
//!
//! The crate is organised by stage of the measurement chain:
//!
//! - [`modes`]: Laguerre-Gaussian mode numerics and radial quadrature.
//! - [`states`]: truncated OAM density matrices and their spectra.
//! - [`interferometer`]: mirror and image-rotator operators, detection
//!   probability, polarization curves and noisy trace synthesis.
//! - [`reconstruct`]: two-shot and four-shot spectrum recovery, accuracy
//!   metrics, sampling planner and half-wave-plate calibration fit.
//! - [`smf`]: the single-mode-fiber projective detector used as a baseline.
//! - [`deviation`]: beam-overlap loss caused by image-rotator angular deviation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deviation;
pub mod error;
pub mod interferometer;
pub mod modes;
pub mod quadrature;
pub mod reconstruct;
pub mod smf;
pub mod states;
pub mod trace;

pub use error::{Error, Result};
