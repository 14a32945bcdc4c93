//! JSON run configuration.
//!
//! Lengths are in wavelengths, rates and Rabi frequencies in units of the
//! decay rate, times in inverse decay rates. Output paths are relative to
//! the `--out` directory.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use photon_fringes::classical::ClassicalConfig;
use photon_fringes::emission::ExperimentConfig;
use photon_fringes::geometry::{Direction, Vec3};
use photon_fringes::screen::AngularGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const UNITS: &str = "lengths in lambda0, rates in A, times in 1/A";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexValue> for Complex64 {
    fn from(c: ComplexValue) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub r1: [f64; 3],
    pub r2: [f64; 3],
    /// Normalized on load; must be nonzero.
    pub dipole: [f64; 3],
    pub decay_rate: f64,
    pub rabi1: ComplexValue,
    pub rabi2: ComplexValue,
}

/// Source amplitudes of the classical comparison model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub e01: ComplexValue,
    pub e02: ComplexValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    /// Clicks before this time are left out of the histogram.
    pub burn_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Map values (analytic, classical or histogram).
    pub csv: String,
    pub pgm: String,
    pub metadata: String,
    /// Raw click stream written by `simulate`.
    pub clicks: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_units")]
    pub units: String,
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalSection>,
    pub grid: GridSection,
    pub simulation: SimulationSection,
    pub outputs: OutputSection,
}

fn default_units() -> String {
    UNITS.to_string()
}

fn field_error(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {e}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses and validates; serde reports the line and column of any
    /// missing, unknown or mistyped field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.experiment()?;
        cfg.grid()?;
        let sim = &cfg.simulation;
        if !(sim.duration > 0.0) || !sim.duration.is_finite() {
            return Err(field_error("simulation.duration", "must be positive and finite"));
        }
        if !(sim.burn_in >= 0.0) || !sim.burn_in.is_finite() {
            return Err(field_error("simulation.burn_in", "must be nonnegative and finite"));
        }
        Ok(cfg)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let e = &self.experiment;
        let dipole = Direction::new(Vec3::from(e.dipole)).map_err(|err| field_error("experiment.dipole", err))?;
        ExperimentConfig::new(Vec3::from(e.r1), Vec3::from(e.r2), dipole, e.decay_rate, e.rabi1.into(), e.rabi2.into())
            .map_err(|err| field_error("experiment", err))
    }

    pub fn classical(&self) -> Result<ClassicalConfig, CliError> {
        let c = self
            .classical
            .as_ref()
            .ok_or_else(|| field_error("classical", "section required by the classical command"))?;
        let exp = self.experiment()?;
        Ok(ClassicalConfig::new(exp.r1(), exp.r2(), exp.dipole(), c.e01.into(), c.e02.into()))
    }

    pub fn grid(&self) -> Result<AngularGrid, CliError> {
        AngularGrid::new(self.grid.n_theta, self.grid.n_phi).map_err(|e| field_error("grid", e))
    }
}
