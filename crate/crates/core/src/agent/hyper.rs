use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, LogStdBounds};

/// Training hyperparameters. Defaults follow the published TASAC setup
/// (4 x 512 ReLU layers, gamma 0.99, batch 100, learning rates 3e-4,
/// tau 0.01, 100 episodes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub gamma: f64,
    pub batch_size: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_entropy: f64,
    pub tau: f64,
    pub episodes: usize,
    /// Entropy target for the temperature update; `-(action dim)`.
    pub target_entropy: f64,
    pub initial_log_alpha: f64,
    /// Hidden layer widths shared by actors and critics.
    pub hidden_layers: Vec<usize>,
    /// Global-norm gradient clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub log_std_bounds: LogStdBounds,
    pub adam: AdamConfig,
    pub replay_capacity: usize,
    /// Rewards are multiplied by this factor before entering the Bellman
    /// targets. Episode returns and ITAE are always reported unscaled.
    pub reward_scale: f64,
    /// Multiplier applied to the tracking error before it enters the
    /// networks (the time component is already in `[0, 1]`).
    pub error_input_scale: f64,
    /// Ablation switch: pick the candidate action with the largest
    /// aggregate Q instead of the smallest, whatever the strategy says.
    pub greedy_selection: bool,
    /// Draw one noise sample and reuse it for every actor.
    pub shared_actor_noise: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            batch_size: 100,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            lr_entropy: 3e-4,
            tau: 0.01,
            episodes: 100,
            target_entropy: -1.0,
            initial_log_alpha: 0.0,
            hidden_layers: vec![512; 4],
            grad_clip: Some(10.0),
            log_std_bounds: LogStdBounds::default(),
            adam: AdamConfig::default(),
            replay_capacity: 1_000_000,
            reward_scale: 1.0,
            error_input_scale: 1.0,
            greedy_selection: false,
            shared_actor_noise: false,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!(
                "gamma {} outside (0, 1]",
                self.gamma
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config(format!("tau {} outside (0, 1]", self.tau)));
        }
        // a zero entropy rate is allowed: it pins the temperature
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0 && self.lr_entropy >= 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(Error::config(
                "batch size must be positive and fit in the replay buffer",
            ));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::config("hidden layers must be non-empty"));
        }
        if !(self.reward_scale.is_finite() && self.error_input_scale.is_finite()) {
            return Err(Error::config("scales must be finite"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::config("gradient clip must be positive"));
            }
        }
        Ok(())
    }
}
