use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{Algorithm, Hyperparameters, SelectionStrategy};
use crate::error::{Error, Result};
use crate::reactor::{EnvConfig, Scenario};

/// Measurement noise level used when a scenario is named without one.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.005;
/// Pre-exponential spread used when a scenario is named without one.
pub const DEFAULT_BTBV_FRACTION: f64 = 0.1;

/// Parse `nominal`, `noise[=fraction]` or `btbv[=fraction]`.
pub fn parse_scenario(s: &str) -> Result<Scenario> {
    let (name, value) = match s.split_once('=') {
        Some((n, v)) => (n, Some(v)),
        None => (s, None),
    };
    let fraction = |default: f64| -> Result<f64> {
        match value {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|f| (0.0..1.0).contains(f))
                .ok_or_else(|| {
                    Error::config(format!(
                        "scenario fraction '{v}' must be a number in [0, 1)"
                    ))
                }),
        }
    };
    match name.to_ascii_lowercase().as_str() {
        "nominal" if value.is_none() => Ok(Scenario::Nominal),
        "noise" => Ok(Scenario::MeasurementNoise {
            fraction: fraction(DEFAULT_NOISE_FRACTION)?,
        }),
        "btbv" => Ok(Scenario::Btbv {
            fraction: fraction(DEFAULT_BTBV_FRACTION)?,
        }),
        _ => Err(Error::config(format!(
            "unknown scenario '{s}' (nominal, noise[=f], btbv[=f])"
        ))),
    }
}

/// Averaging window for a scenario when none is configured: 20 episodes
/// under measurement noise, 10 otherwise.
pub fn default_window(scenario: &Scenario) -> usize {
    match scenario {
        Scenario::MeasurementNoise { .. } => 20,
        _ => 10,
    }
}

/// Sizing of a multi-seed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 3 seeds x 40 episodes with 2 x 64 networks.
    Desk,
    /// 10 seeds x 100 episodes with 4 x 512 networks.
    Full,
}

/// One training configuration repeated over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    /// Ignored by the single-actor baseline.
    pub strategy: SelectionStrategy,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    /// Trailing episodes averaged per seed; `None` picks the scenario default.
    #[serde(default)]
    pub window: Option<usize>,
    pub hyper: Hyperparameters,
    /// Plant, control settings and scenario.
    pub env: EnvConfig,
}

/// What a `--config` file may set. Every key is optional, and a bare reactor
/// parameter file (top-level `[kinetics]`, `[thermal]`, ...) is accepted too.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOverrides {
    pub preset: Option<Preset>,
    pub algorithm: Option<Algorithm>,
    pub strategy: Option<SelectionStrategy>,
    pub seeds: Option<Vec<u64>>,
    pub episodes: Option<usize>,
    pub window: Option<usize>,
    pub hyper: Option<Hyperparameters>,
    pub env: Option<EnvConfig>,
}

impl SpecOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text)?;
        if table.contains_key("kinetics") {
            return Ok(Self {
                env: Some(EnvConfig::from_toml_str(text)?),
                ..Self::default()
            });
        }
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Apply to `spec`, leaving unset keys alone. A preset is applied first.
    pub fn apply(self, spec: &mut ExperimentSpec) {
        if let Some(p) = self.preset {
            let fresh = ExperimentSpec::preset(p, spec.env.scenario, spec.algorithm, spec.strategy);
            spec.seeds = fresh.seeds;
            spec.episodes = fresh.episodes;
            spec.hyper = fresh.hyper;
        }
        if let Some(env) = self.env {
            spec.env = env;
        }
        if let Some(a) = self.algorithm {
            spec.algorithm = a;
        }
        if let Some(s) = self.strategy {
            spec.strategy = s;
        }
        if let Some(s) = self.seeds {
            spec.seeds = s;
        }
        if let Some(e) = self.episodes {
            spec.episodes = e;
        }
        if self.window.is_some() {
            spec.window = self.window;
        }
        if let Some(h) = self.hyper {
            spec.hyper = h;
        }
    }
}

impl ExperimentSpec {
    pub fn preset(
        preset: Preset,
        scenario: Scenario,
        algorithm: Algorithm,
        strategy: SelectionStrategy,
    ) -> Self {
        let (seeds, episodes, hidden) = match preset {
            Preset::Desk => (3, 40, vec![64; 2]),
            Preset::Full => (10, 100, vec![512; 4]),
        };
        Self {
            algorithm,
            strategy,
            seeds: (0..seeds).collect(),
            episodes,
            window: None,
            hyper: Hyperparameters {
                episodes,
                hidden_layers: hidden,
                ..Hyperparameters::default()
            },
            env: EnvConfig::default().with_scenario(scenario),
        }
    }

    pub fn desk(scenario: Scenario, algorithm: Algorithm, strategy: SelectionStrategy) -> Self {
        Self::preset(Preset::Desk, scenario, algorithm, strategy)
    }

    pub fn full(scenario: Scenario, algorithm: Algorithm, strategy: SelectionStrategy) -> Self {
        Self::preset(Preset::Full, scenario, algorithm, strategy)
    }

    pub fn scenario(&self) -> Scenario {
        self.env.scenario
    }

    pub fn effective_window(&self) -> usize {
        self.window
            .unwrap_or_else(|| default_window(&self.env.scenario))
    }

    /// Short name such as `tasac-min-min` or `sac`.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::Tasac => format!("tasac-{}", self.strategy),
            Algorithm::Sac => "sac".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds must be distinct"));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes must be positive"));
        }
        let w = self.effective_window();
        if w == 0 || w > self.episodes {
            return Err(Error::config(format!(
                "averaging window {w} must be between 1 and the episode count {}",
                self.episodes
            )));
        }
        self.hyper.validate()?;
        self.env.validate()
    }

    /// SHA-256 over the canonical JSON encoding, with seeds in sorted order
    /// so the hash does not depend on how the seed list was written.
    pub fn config_hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.seeds.sort_unstable();
        let bytes = serde_json::to_vec(&canonical)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

/// Parse a seed list such as `0,1,2`, `0..10` or a bare count `5` (seeds 0..5).
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::config(format!("cannot parse seed list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    if s.contains(',') {
        return s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect();
    }
    let n: u64 = s.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((0..n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names() {
        assert_eq!(parse_scenario("nominal").unwrap(), Scenario::Nominal);
        assert_eq!(
            parse_scenario("noise").unwrap(),
            Scenario::MeasurementNoise { fraction: 0.005 }
        );
        assert_eq!(
            parse_scenario("btbv=0.2").unwrap(),
            Scenario::Btbv { fraction: 0.2 }
        );
        assert!(parse_scenario("btbv=2").is_err());
        assert!(parse_scenario("storm").is_err());
    }

    #[test]
    fn windows_follow_scenario() {
        let mut s = ExperimentSpec::desk(
            parse_scenario("noise").unwrap(),
            Algorithm::Tasac,
            SelectionStrategy::MinMin,
        );
        assert_eq!(s.effective_window(), 20);
        s.env.scenario = Scenario::Btbv { fraction: 0.1 };
        assert_eq!(s.effective_window(), 10);
        s.window = Some(3);
        assert_eq!(s.effective_window(), 3);
    }

    #[test]
    fn validation() {
        let mut s =
            ExperimentSpec::desk(Scenario::Nominal, Algorithm::Sac, SelectionStrategy::MinMin);
        s.validate().unwrap();
        s.seeds = vec![1, 1];
        assert!(s.validate().is_err());
        s.seeds = vec![];
        assert!(s.validate().is_err());
        s.seeds = vec![0];
        s.window = Some(41);
        assert!(s.validate().is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5..7").unwrap(), vec![5, 6]);
        assert_eq!(parse_seeds("4, 9,1").unwrap(), vec![4, 9, 1]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("0").is_err());
    }

    #[test]
    fn hash_ignores_seed_order() {
        let mut a = ExperimentSpec::desk(
            Scenario::Nominal,
            Algorithm::Tasac,
            SelectionStrategy::MinMax,
        );
        let mut b = a.clone();
        a.seeds = vec![2, 0, 1];
        b.seeds = vec![0, 1, 2];
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
        b.episodes = 41;
        assert_ne!(a.config_hash().unwrap(), b.config_hash().unwrap());
    }

    #[test]
    fn overrides_accept_reactor_files_and_experiment_files() {
        let o = SpecOverrides::from_toml_str(crate::reactor::DEFAULT_CONFIG_TOML).unwrap();
        assert_eq!(o.env.unwrap(), EnvConfig::default());

        let o =
            SpecOverrides::from_toml_str("preset = \"full\"\nepisodes = 7\nseeds = [4]\n").unwrap();
        let mut s = ExperimentSpec::desk(
            Scenario::Nominal,
            Algorithm::Tasac,
            SelectionStrategy::MinMin,
        );
        o.apply(&mut s);
        assert_eq!(s.episodes, 7);
        assert_eq!(s.seeds, vec![4]);
        assert_eq!(s.hyper.hidden_layers, vec![512; 4]);
        assert!(SpecOverrides::from_toml_str("epsiodes = 3").is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let s = ExperimentSpec::desk(
            parse_scenario("btbv").unwrap(),
            Algorithm::Tasac,
            SelectionStrategy::MaxMax,
        );
        let text = toml::to_string(&s).unwrap();
        let mut back =
            ExperimentSpec::desk(Scenario::Nominal, Algorithm::Sac, SelectionStrategy::MinMin);
        SpecOverrides::from_toml_str(&text)
            .unwrap()
            .apply(&mut back);
        assert_eq!(back, s);
    }
}
