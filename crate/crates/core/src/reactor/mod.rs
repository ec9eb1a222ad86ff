//! Batch transesterification reactor: kinetics, energy balances, RK4
//! integration, and the control environment.

mod env;
mod model;
mod params;

pub use env::{
    observe, reward_fn, write_trajectory_csv, Observation, ReactorEnv, StepOutcome, TrajectoryRow,
    TRAJECTORY_COLUMNS,
};
pub use model::{
    arrhenius, energy_derivatives, rk4, rk4_step, species_derivatives, ReactorState, SPECIES_NAMES,
};
pub use params::{
    ControlConfig, EnvConfig, KineticParams, Scenario, ThermalParams, TimeUnit, DEFAULT_CONFIG_TOML,
};
