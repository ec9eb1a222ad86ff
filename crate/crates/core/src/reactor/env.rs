use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{rk4_step, ReactorState};
use super::params::{EnvConfig, KineticParams, Scenario};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// What the controller sees after each move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Measured reactor temperature minus setpoint, K.
    pub error: f64,
    /// Batch clock, s.
    pub time: f64,
    /// Batch clock scaled to `[0, 1]` by the batch duration.
    pub time_fraction: f64,
    /// Reactor temperature as measured (noisy under the noise scenario), K.
    pub measured_t_reactor: f64,
}

impl Observation {
    /// Network input `[e, t / duration]`.
    pub fn features(&self) -> [f64; 2] {
        [self.error, self.time_fraction]
    }
}

/// `r = -|e| t` with `t` in the configured clock unit.
pub fn reward_fn(error: f64, time: f64) -> f64 {
    -error.abs() * time
}

fn truncated_normal(rng: &mut Rng, limit: f64) -> f64 {
    loop {
        let z = rng.normal();
        if z.abs() <= limit {
            return z;
        }
    }
}

/// Measure the state. Only the measurement-noise scenario draws from `rng`.
pub fn observe(state: &ReactorState, config: &EnvConfig, rng: &mut Rng) -> Observation {
    let measured = match config.scenario {
        Scenario::MeasurementNoise { fraction } if fraction > 0.0 => {
            state.t_reactor * (1.0 + fraction * truncated_normal(rng, 3.0))
        }
        _ => state.t_reactor,
    };
    Observation {
        error: measured - config.control.setpoint,
        time: state.time,
        time_fraction: state.time / config.control.batch_duration,
        measured_t_reactor: measured,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Jacket inlet temperature applied over the interval, K.
    pub t_jin: f64,
}

/// One row of the per-step trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub t_reactor: f64,
    pub t_jacket: f64,
    pub t_jin: f64,
    pub error: f64,
    pub reward: f64,
    pub concentrations: [f64; 6],
}

pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "t", "T_r", "T_j", "T_jin", "e", "reward", "TG", "DG", "MG", "E", "A", "GL",
];

impl TrajectoryRow {
    fn record(&self) -> Vec<String> {
        let mut out = vec![
            self.time.to_string(),
            self.t_reactor.to_string(),
            self.t_jacket.to_string(),
            self.t_jin.to_string(),
            self.error.to_string(),
            self.reward.to_string(),
        ];
        out.extend(self.concentrations.iter().map(f64::to_string));
        out
    }
}

pub fn write_trajectory_csv(rows: &[TrajectoryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// One reactor batch driven one control interval at a time.
#[derive(Debug, Clone)]
pub struct ReactorEnv {
    config: EnvConfig,
    batch_kinetics: KineticParams,
    state: ReactorState,
    rng: Rng,
    steps_taken: usize,
    done: bool,
}

impl ReactorEnv {
    pub fn new(config: EnvConfig, rng: Rng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            batch_kinetics: config.kinetics.clone(),
            state: config.initial,
            config,
            rng,
            steps_taken: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &ReactorState {
        &self.state
    }

    /// Kinetic parameters in force for the current batch.
    pub fn batch_kinetics(&self) -> &KineticParams {
        &self.batch_kinetics
    }

    pub fn rng(&self) -> &Rng {
        &self.rng
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Start a new batch from the configured initial charge.
    pub fn reset(&mut self) -> Observation {
        self.batch_kinetics = self.config.kinetics.clone();
        if let Scenario::Btbv { fraction } = self.config.scenario {
            if fraction > 0.0 {
                for ko in &mut self.batch_kinetics.ko {
                    *ko *= self.rng.uniform_range(1.0 - fraction, 1.0 + fraction);
                }
            }
        }
        self.state = self.config.initial;
        self.steps_taken = 0;
        self.done = false;
        observe(&self.state, &self.config, &mut self.rng)
    }

    /// Map an action in `[-1, 1]` affinely onto the jacket inlet range.
    pub fn jacket_inlet(&self, action: f64) -> f64 {
        let [lo, hi] = self.config.control.action_bounds;
        if action == -1.0 {
            return lo;
        }
        if action == 1.0 {
            return hi;
        }
        lo + 0.5 * (action + 1.0) * (hi - lo)
    }

    /// Apply `action` for one control interval. An integration failure ends
    /// the batch and is returned as an error.
    pub fn step(&mut self, action: f64) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::usage(
                "step called on a finished batch; call reset first",
            ));
        }
        if !action.is_finite() || action.abs() > 1.0 {
            return Err(Error::usage(format!("action {action} outside [-1, 1]")));
        }
        let t_jin = self.jacket_inlet(action);
        let ctl = &self.config.control;
        let dt = ctl.control_interval / ctl.rk4_substeps as f64;
        let mut s = self.state;
        for _ in 0..ctl.rk4_substeps {
            match rk4_step(&s, &self.batch_kinetics, &self.config.thermal, t_jin, dt) {
                Ok(next) => s = next,
                Err(e) => {
                    self.done = true;
                    return Err(e);
                }
            }
        }
        self.steps_taken += 1;
        // exact clock, free of substep accumulation error
        s.time = self.config.initial.time + self.steps_taken as f64 * ctl.control_interval;
        self.state = s;
        self.done = s.time >= ctl.batch_duration - 1e-9 * ctl.batch_duration;
        let observation = observe(&self.state, &self.config, &mut self.rng);
        let reward = reward_fn(
            observation.error,
            observation.time / ctl.time_unit.seconds(),
        );
        Ok(StepOutcome {
            observation,
            reward,
            done: self.done,
            t_jin,
        })
    }

    pub fn trajectory_row(&self, outcome: &StepOutcome) -> TrajectoryRow {
        TrajectoryRow {
            time: self.state.time,
            t_reactor: self.state.t_reactor,
            t_jacket: self.state.t_jacket,
            t_jin: outcome.t_jin,
            error: outcome.observation.error,
            reward: outcome.reward,
            concentrations: self.state.concentrations(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reactor::rk4_step;

    fn env(scenario: Scenario, seed: u64) -> ReactorEnv {
        ReactorEnv::new(EnvConfig::default().with_scenario(scenario), Rng::new(seed)).unwrap()
    }

    #[test]
    fn reward_values() {
        assert_eq!(reward_fn(0.0, 55.0), 0.0);
        assert_eq!(reward_fn(-3.0, 0.0), 0.0);
        assert_eq!(reward_fn(2.0, 10.0), -20.0);
        assert_eq!(reward_fn(-2.0, 10.0), -20.0);
    }

    #[test]
    fn zero_error_at_setpoint() {
        let cfg = EnvConfig::default();
        let mut s = cfg.initial;
        s.t_reactor = cfg.control.setpoint;
        let obs = observe(&s, &cfg, &mut Rng::new(0));
        assert_eq!(obs.error, 0.0);
    }

    #[test]
    fn zero_noise_matches_nominal() {
        let nominal = EnvConfig::default();
        let quiet = nominal
            .clone()
            .with_scenario(Scenario::MeasurementNoise { fraction: 0.0 });
        let s = nominal.initial;
        let a = observe(&s, &nominal, &mut Rng::new(1));
        let b = observe(&s, &quiet, &mut Rng::new(1));
        assert_eq!(a, b);
    }

    #[test]
    fn noise_spread_matches_fraction() {
        let cfg =
            EnvConfig::default().with_scenario(Scenario::MeasurementNoise { fraction: 0.005 });
        let mut s = cfg.initial;
        s.t_reactor = 330.0;
        let mut rng = Rng::new(99);
        let n = 100_000;
        let errs: Vec<f64> = (0..n).map(|_| observe(&s, &cfg, &mut rng).error).collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = 0.005 * 330.0;
        assert!(
            (var.sqrt() / target - 1.0).abs() < 0.02,
            "sd {}",
            var.sqrt()
        );
        // truncation at 3 sigma
        assert!(errs
            .iter()
            .all(|e| (e - (330.0 - cfg.control.setpoint)).abs() <= 3.0 * target + 1e-9));
    }

    #[test]
    fn bound_mapping() {
        let e = env(Scenario::Nominal, 0);
        let [lo, hi] = e.config().control.action_bounds;
        assert_eq!(e.jacket_inlet(-1.0), lo);
        assert_eq!(e.jacket_inlet(1.0), hi);
        assert!((e.jacket_inlet(0.0) - 0.5 * (lo + hi)).abs() < 1e-12);
    }

    #[test]
    fn nominal_reset_keeps_defaults_and_draws_nothing() {
        let mut e = env(Scenario::Nominal, 5);
        let before = e.rng().state();
        e.reset();
        assert_eq!(e.batch_kinetics(), &EnvConfig::default().kinetics);
        for _ in 0..120 {
            e.step(0.2).unwrap();
        }
        assert_eq!(e.rng().state(), before);
    }

    #[test]
    fn btbv_zero_fraction_is_nominal() {
        let mut e = env(Scenario::Btbv { fraction: 0.0 }, 5);
        e.reset();
        assert_eq!(e.batch_kinetics(), &EnvConfig::default().kinetics);
    }

    #[test]
    fn btbv_perturbation_bounded_and_fresh_per_batch() {
        let nominal = EnvConfig::default().kinetics.ko;
        let mut e = env(Scenario::Btbv { fraction: 0.10 }, 5);
        let mut previous = None;
        for _ in 0..1000 {
            e.reset();
            let ko = e.batch_kinetics().ko;
            for i in 0..6 {
                let r = ko[i] / nominal[i];
                assert!((0.9..=1.1).contains(&r), "ratio {r}");
            }
            assert_ne!(Some(ko), previous);
            previous = Some(ko);
        }
    }

    #[test]
    fn full_batch_and_usage_errors() {
        let mut e = env(Scenario::Nominal, 1);
        assert!(matches!(e.step(0.0), Err(Error::Usage(_))));
        e.reset();
        assert!(matches!(e.step(1.5), Err(Error::Usage(_))));
        let mut n = 0;
        loop {
            let out = e.step(0.1).unwrap();
            n += 1;
            assert!(out.reward <= 0.0);
            if out.done {
                break;
            }
        }
        assert_eq!(n, 120);
        assert_eq!(e.state().time, 7200.0);
        assert!(matches!(e.step(0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn equal_seeds_equal_steps() {
        for scenario in [
            Scenario::Nominal,
            Scenario::MeasurementNoise { fraction: 0.005 },
            Scenario::Btbv { fraction: 0.1 },
        ] {
            let mut a = env(scenario, 3);
            let mut b = env(scenario, 3);
            assert_eq!(a.reset(), b.reset());
            for k in 0..10 {
                let act = (k as f64 * 0.37).sin();
                assert_eq!(a.step(act).unwrap(), b.step(act).unwrap());
                assert_eq!(a.state(), b.state());
            }
        }
    }

    #[test]
    fn step_agrees_with_refined_integration() {
        let mut e = env(Scenario::Nominal, 0);
        e.reset();
        for _ in 0..5 {
            e.step(0.6).unwrap();
        }
        let start = *e.state();
        e.step(-0.3).unwrap();
        let coarse = *e.state();
        let cfg = e.config().clone();
        let t_jin = e.jacket_inlet(-0.3);
        let n = cfg.control.rk4_substeps * 10;
        let dt = cfg.control.control_interval / n as f64;
        let mut fine = start;
        for _ in 0..n {
            fine = rk4_step(&fine, &cfg.kinetics, &cfg.thermal, t_jin, dt).unwrap();
        }
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        for (c, f) in coarse.concentrations().iter().zip(fine.concentrations()) {
            assert!((c - f).abs() < 1e-6 * f.abs().max(1e-3));
        }
        assert!(rel(coarse.t_reactor, fine.t_reactor) < 1e-6);
        assert!(rel(coarse.t_jacket, fine.t_jacket) < 1e-6);
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let mut e = env(Scenario::Nominal, 0);
        e.reset();
        let rows: Vec<TrajectoryRow> = (0..3)
            .map(|_| {
                let out = e.step(0.0).unwrap();
                e.trajectory_row(&out)
            })
            .collect();
        write_trajectory_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS.join(","));
        assert_eq!(lines.count(), 3);
    }
}
