//! Declarative run description read by `simulate` and `reconstruct`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use oamspec_core::interferometer::{InterferometerConfig, PolarizationCurve};
use oamspec_core::reconstruct::{piecewise_grid, plan_sampling};
use oamspec_core::states::{
    comb_state, diagonal_state, gaussian_pure_state, mix_states, radial_weights_from_map, OamState, Spectrum,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{open, read_to_string, resolve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolChoice {
    #[default]
    TwoShot,
    FourShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Pure `p = 0` state with a Gaussian spectrum.
    Gaussian { sigma: f64, n: usize },
    /// Incoherent mixture of Gaussian pure states.
    Mixture {
        n: usize,
        components: Vec<MixtureComponent>,
    },
    /// Equal superposition of the listed `l`.
    Comb { ls: Vec<i32>, n: usize },
    /// Diagonal mixed state with the given spectrum and radial weights.
    Diagonal {
        spectrum: Spectrum,
        #[serde(default)]
        radial_weights: BTreeMap<usize, f64>,
    },
    /// Diagonal `p = 0` state with a spectrum read from a JSON file.
    SpectrumFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Uniform grid at the largest step allowed for `l_max` (default: the state's N).
    Plan {
        #[serde(default)]
        l_max: Option<usize>,
    },
    /// `start_deg, start_deg + step_deg, ...` strictly below `start_deg + 180`.
    Uniform {
        step_deg: f64,
        #[serde(default)]
        start_deg: f64,
    },
    Explicit {
        theta_rad: Vec<f64>,
    },
    Piecewise {
        fine_step_deg: f64,
        fine_half_width_deg: f64,
        coarse_step_deg: f64,
    },
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::Plan { l_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub state: StateSpec,
    #[serde(default)]
    pub interferometer: InterferometerConfig,
    /// CSV polarization curve; overrides `interferometer.polarization`.
    #[serde(default)]
    pub polarization_file: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub protocol: ProtocolChoice,
    /// Reconstruction truncation; defaults to the state's N.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Reconstruct even when the grid violates the step bound.
    #[serde(default)]
    pub allow_undersampled: bool,
}

/// A config together with the file it came from, for relative paths.
pub struct LoadedConfig {
    pub run: RunConfig,
    pub source: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_to_string(path)?;
        let run: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let loaded = Self {
            run,
            source: Some(path.to_path_buf()),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn from_run(run: RunConfig) -> CliResult<Self> {
        let loaded = Self { run, source: None };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> CliResult<()> {
        if let GridSpec::Explicit { theta_rad } = &self.run.grid {
            if theta_rad.is_empty() {
                return Err(CliError::config("explicit theta grid is empty"));
            }
            if theta_rad.iter().any(|t| !t.is_finite()) || theta_rad.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::config(
                    "explicit theta grid must be finite and strictly increasing",
                ));
            }
        }
        if let GridSpec::Uniform { step_deg, start_deg } = &self.run.grid {
            if !(*step_deg > 0.0 && *step_deg <= 180.0) || !start_deg.is_finite() {
                return Err(CliError::config(format!(
                    "uniform grid step {step_deg} deg must lie in (0, 180]"
                )));
            }
        }
        if self.run.n == Some(0) {
            return Err(CliError::config("n must be at least 1"));
        }
        self.run.interferometer.validate()?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        resolve(self.source.as_deref(), path)
    }

    pub fn state(&self) -> CliResult<OamState> {
        Ok(match &self.run.state {
            StateSpec::Gaussian { sigma, n } => gaussian_pure_state(*sigma, *n)?,
            StateSpec::Mixture { n, components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((gaussian_pure_state(c.sigma, *n)?, c.weight)))
                    .collect::<CliResult<Vec<_>>>()?;
                mix_states(&parts)?
            }
            StateSpec::Comb { ls, n } => comb_state(ls, *n)?,
            StateSpec::Diagonal {
                spectrum,
                radial_weights,
            } => {
                let w = if radial_weights.is_empty() {
                    vec![1.0]
                } else {
                    radial_weights_from_map(radial_weights)
                };
                diagonal_state(spectrum, &w)?
            }
            StateSpec::SpectrumFile { path } => {
                let spectrum = read_spectrum(&self.resolve(path))?;
                diagonal_state(&spectrum, &[1.0])?
            }
        })
    }

    pub fn polarization(&self) -> CliResult<PolarizationCurve> {
        match &self.run.polarization_file {
            Some(p) => read_polarization(&self.resolve(p)),
            None => Ok(self.run.interferometer.polarization.clone()),
        }
    }

    /// Interferometer settings with the polarization file and seed override applied.
    pub fn interferometer(&self, seed_override: Option<u64>) -> CliResult<InterferometerConfig> {
        let mut cfg = self.run.interferometer.clone();
        cfg.polarization = self.polarization()?;
        if let Some(seed) = seed_override.or(self.run.seed) {
            cfg.noise.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn thetas(&self, state_n: usize) -> CliResult<Vec<f64>> {
        let grid = match &self.run.grid {
            GridSpec::Plan { l_max } => plan_sampling(l_max.unwrap_or(state_n))?.uniform_grid(),
            GridSpec::Uniform { step_deg, start_deg } => {
                let count = (180.0 / step_deg - 1e-9).floor() as usize + 1;
                (0..count)
                    .map(|k| (start_deg + k as f64 * step_deg).to_radians())
                    .collect()
            }
            GridSpec::Explicit { theta_rad } => theta_rad.clone(),
            GridSpec::Piecewise {
                fine_step_deg,
                fine_half_width_deg,
                coarse_step_deg,
            } => piecewise_grid(
                fine_step_deg.to_radians(),
                fine_half_width_deg.to_radians(),
                coarse_step_deg.to_radians(),
            )?,
        };
        if grid.is_empty() {
            return Err(CliError::config("theta grid is empty"));
        }
        Ok(grid)
    }
}

pub fn read_spectrum(path: &Path) -> CliResult<Spectrum> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn read_polarization(path: &Path) -> CliResult<PolarizationCurve> {
    Ok(PolarizationCurve::from_csv_reader(open(path)?)?)
}
