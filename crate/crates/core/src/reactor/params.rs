use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::ReactorState;
use crate::error::{Error, Result};

/// Shipped parameter file; `EnvConfig::default()` parses exactly this text.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../config/reactor_default.toml");

const FORMAT_VERSION: u32 = 1;

/// Arrhenius parameters for the six elementary rates, ordered
/// TG->DG, DG->TG, DG->MG, MG->DG, MG->GL, GL->MG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    /// Pre-exponential factors, L/(mol s).
    pub ko: [f64; 6],
    /// Activation energies, J/mol.
    pub activation_energy: [f64; 6],
    /// J/(mol K).
    pub gas_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub molar_mass: f64,
    pub volume: f64,
    pub density: f64,
    pub heat_capacity: f64,
    pub heat_of_reaction: f64,
    pub jacket_flow: f64,
    pub jacket_volume: f64,
    pub jacket_density: f64,
    pub coolant_heat_capacity: f64,
    pub ua: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Seconds,
    Minutes,
    Hours,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Seconds => 1.0,
            TimeUnit::Minutes => 60.0,
            TimeUnit::Hours => 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Reactor temperature setpoint, K.
    pub setpoint: f64,
    /// s
    pub batch_duration: f64,
    /// s
    pub control_interval: f64,
    pub rk4_substeps: usize,
    /// Jacket inlet temperature range `[min, max]`, K.
    pub action_bounds: [f64; 2],
    pub time_unit: TimeUnit,
}

/// Operating scenario applied on top of the nominal plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Nominal,
    /// Multiplicative Gaussian noise on the measured reactor temperature,
    /// standard deviation `fraction` of the reading, truncated at 3 sigma.
    MeasurementNoise { fraction: f64 },
    /// Each pre-exponential factor scaled by an independent uniform factor in
    /// `[1 - fraction, 1 + fraction]`, redrawn at every reset.
    Btbv { fraction: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Nominal => "nominal",
            Scenario::MeasurementNoise { .. } => "noise",
            Scenario::Btbv { .. } => "btbv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub kinetics: KineticParams,
    pub thermal: ThermalParams,
    pub control: ControlConfig,
    pub initial: ReactorState,
    #[serde(default)]
    pub scenario: Scenario,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG_TOML).expect("shipped parameter file is valid")
    }
}

impl EnvConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EnvConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = scenario;
        self
    }

    /// Number of control moves per batch.
    pub fn steps_per_batch(&self) -> usize {
        (self.control.batch_duration / self.control.control_interval).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported parameter file version {}",
                self.format_version
            )));
        }
        let k = &self.kinetics;
        if k.ko
            .iter()
            .chain(&k.activation_energy)
            .any(|v| !(*v > 0.0 && v.is_finite()))
            || !(k.gas_constant > 0.0)
        {
            return Err(Error::config(
                "kinetic parameters must be finite and positive",
            ));
        }
        let t = &self.thermal;
        let positive = [
            t.molar_mass,
            t.volume,
            t.density,
            t.heat_capacity,
            t.jacket_flow,
            t.jacket_volume,
            t.jacket_density,
            t.coolant_heat_capacity,
            t.ua,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !t.heat_of_reaction.is_finite()
        {
            return Err(Error::config(
                "thermal parameters must be finite and positive",
            ));
        }
        let c = &self.control;
        if !(c.setpoint > 0.0) || !(c.control_interval > 0.0) || !(c.batch_duration > 0.0) {
            return Err(Error::config(
                "setpoint, batch duration and control interval must be positive",
            ));
        }
        let ratio = c.batch_duration / c.control_interval;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(format!(
                "batch duration {} is not a multiple of the control interval {}",
                c.batch_duration, c.control_interval
            )));
        }
        if c.rk4_substeps == 0 {
            return Err(Error::config("rk4_substeps must be at least 1"));
        }
        let [lo, hi] = c.action_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::config(format!(
                "action bounds [{lo}, {hi}] are not ordered"
            )));
        }
        let s = &self.initial;
        if s.concentrations()
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()))
            || !(s.t_reactor > 0.0)
            || !(s.t_jacket > 0.0)
        {
            return Err(Error::config(
                "initial concentrations must be >= 0 and temperatures > 0",
            ));
        }
        match self.scenario {
            Scenario::Nominal => {}
            Scenario::MeasurementNoise { fraction } => {
                if !(0.0..=0.1).contains(&fraction) {
                    return Err(Error::config(format!(
                        "noise fraction {fraction} outside [0, 0.1]"
                    )));
                }
            }
            Scenario::Btbv { fraction } => {
                if !(0.0..1.0).contains(&fraction) {
                    return Err(Error::config(format!(
                        "btbv fraction {fraction} outside [0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }
}
