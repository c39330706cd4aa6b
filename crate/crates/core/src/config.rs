//! Plain-text run configuration: one TOML document describes the grid, the
//! physics, the forces, the delay operator, the decay parameters under
//! test, the integrator, and the initial data.  Loading validates
//! everything up front so later stages only see well-formed setups.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::forcing::{Amplitude, Forcing};
use crate::params::PhysicalParams;
use crate::spectral::{Grid, ModeSeed, SpectralField};
use crate::stepper::Scheme;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub alpha: f64,
    /// Memory span of the delay operator.
    pub h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForcingConfig {
    pub modes: Vec<ModeSeed>,
    pub amplitude: Amplitude,
}

/// Decay parameters the certificates are evaluated at.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub sigma: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    #[serde(default = "default_true")]
    pub convection: bool,
}

fn default_true() -> bool {
    true
}

/// How the initial velocity field is produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    /// Deterministic random field from a seed.
    Random { seed: u64, amplitude: f64, decay: f64 },
    /// Explicit mode list.
    Modes { modes: Vec<ModeSeed> },
    /// A stored field snapshot.
    Snapshot { path: String },
}

/// How the initial history segment is filled below the release time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistoryFill {
    /// Hold the initial field constant over the memory span.
    #[default]
    Constant,
    /// Zero history below the release time.
    Zero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialConfig {
    /// Release time.
    pub tau: f64,
    #[serde(flatten)]
    pub kind: InitialKind,
    #[serde(default)]
    pub history: HistoryFill,
}

/// Complete description of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub delay: DelaySpec,
    pub analysis: AnalysisConfig,
    pub stepper: StepperConfig,
    pub initial: InitialConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a configuration file.  An absent file is a
    /// configuration error (not a missing artifact): configs are inputs the
    /// caller writes, not products of earlier stages.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config '{}': {e}", path.display())))?;
        RunConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params()?;
        self.forcing_amplitude_check()?;
        self.delay.validate(self.physics.h)?;
        if !(self.analysis.sigma.is_finite() && self.analysis.sigma > 0.0) {
            return Err(Error::config("analysis.sigma must be positive"));
        }
        if !(self.analysis.beta.is_finite() && self.analysis.beta > 0.0) {
            return Err(Error::config("analysis.beta must be positive"));
        }
        if !(self.stepper.dt.is_finite() && self.stepper.dt > 0.0) {
            return Err(Error::config("stepper.dt must be positive"));
        }
        if self.stepper.steps == 0 {
            return Err(Error::config("stepper.steps must be at least 1"));
        }
        let ratio = self.physics.h / self.stepper.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio < 1.0 {
            return Err(Error::config(format!(
                "stepper.dt = {} does not divide the memory span h = {}",
                self.stepper.dt, self.physics.h
            )));
        }
        match &self.initial.kind {
            InitialKind::Random { amplitude, decay, .. } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::config("initial amplitude must be nonnegative"));
                }
                if !(decay.is_finite() && *decay >= 0.0) {
                    return Err(Error::config("initial spectral decay must be nonnegative"));
                }
            }
            InitialKind::Modes { modes } => {
                let grid = self.grid()?;
                for m in modes {
                    grid.encode_mode(&m.k)?;
                }
            }
            InitialKind::Snapshot { path } => {
                if path.is_empty() {
                    return Err(Error::config("initial snapshot path is empty"));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n, self.grid.box_length)
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::on_grid(self.physics.nu, self.physics.alpha, self.physics.h, self.grid()?)
    }

    fn forcing_amplitude_check(&self) -> Result<()> {
        self.forcing.amplitude.validate()
    }

    pub fn forcing(&self) -> Result<Forcing> {
        if self.forcing.modes.is_empty() {
            return Ok(Forcing::zero(self.grid()?));
        }
        Forcing::from_modes(self.grid()?, &self.forcing.modes, self.forcing.amplitude)
    }

    /// Builds the initial velocity field (loading the snapshot if one is
    /// referenced, resolved relative to `base` when that is provided).
    pub fn initial_field(&self, base: Option<&Path>) -> Result<SpectralField> {
        let grid = self.grid()?;
        match &self.initial.kind {
            InitialKind::Random { seed, amplitude, decay } => {
                Ok(SpectralField::random(grid, *seed, *amplitude, *decay))
            }
            InitialKind::Modes { modes } => SpectralField::from_modes(grid, modes),
            InitialKind::Snapshot { path } => {
                let p = Path::new(path);
                let full = match (p.is_relative(), base) {
                    (true, Some(b)) => b.join(p),
                    _ => p.to_path_buf(),
                };
                let (field, _) = crate::io::load_field(&full)?;
                if field.grid() != grid {
                    return Err(Error::config(format!(
                        "snapshot '{}' grid does not match the configured grid",
                        full.display()
                    )));
                }
                Ok(field)
            }
        }
    }

    /// History value below the release time, per the configured fill.
    pub fn history_field(&self, u0: &SpectralField) -> SpectralField {
        match self.initial.history {
            HistoryFill::Constant => u0.clone(),
            HistoryFill::Zero => SpectralField::zeros(u0.grid()),
        }
    }
}
