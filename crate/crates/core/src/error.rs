use thiserror::Error;

/// Errors produced by the simulation and reconstruction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument outside supported numeric range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("theta grids differ: {0}")]
    GridMismatch(String),

    #[error(
        "theta grid undersampled for l_max = {l_max}: largest step {step_deg:.4} deg exceeds \
         the bound 180/(2*l_max+1) = {max_step_deg:.4} deg"
    )]
    Undersampled {
        l_max: usize,
        step_deg: f64,
        max_step_deg: f64,
    },

    #[error("cos(psi) = {cos_psi:e} at theta = {theta} rad is too close to zero for polarization correction")]
    PolarizationSingular { theta: f64, cos_psi: f64 },

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("quadrature grid insufficient: {0}")]
    Quadrature(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
