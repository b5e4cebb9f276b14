use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::AdamConfig;

/// Hyperparameters shared by both trainers. Actions live in `[-1, 1]`, so
/// noise magnitudes are fractions of each dimension's half-range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration_noise: f64,
    pub total_steps: u64,
    pub buffer_size: usize,
    pub batch_size: usize,
    pub random_steps: u64,
    pub tau: f64,
    pub target_policy_noise: f64,
    pub target_noise_clip: f64,
    pub policy_delay: u64,
    /// Critic and actor iterations per finished episode of one-step DDPG.
    pub one_step_train_iters: usize,
    /// Gradient updates per environment step of TD3.
    pub updates_per_step: usize,
    /// Hidden widths of the TD3 actor and critics.
    pub hidden: Vec<usize>,
    /// Hidden widths of the trot-controller actor.
    pub scaling_actor_hidden: Vec<usize>,
    /// Hidden widths of the one-step DDPG critic.
    pub scaling_critic_hidden: Vec<usize>,
    /// Initial scale of the actor's output layer.
    pub actor_output_scale: f64,
    /// The one-step critic predicts returns divided by this value.
    pub return_scale: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            discount: 0.99,
            exploration_noise: 0.1,
            total_steps: 300_000,
            buffer_size: 300_000,
            batch_size: 100,
            random_steps: 10_000,
            tau: 0.005,
            target_policy_noise: 0.2,
            target_noise_clip: 0.5,
            policy_delay: 2,
            one_step_train_iters: 100,
            updates_per_step: 1,
            hidden: vec![256, 256],
            scaling_actor_hidden: vec![8],
            scaling_critic_hidden: vec![128, 128],
            actor_output_scale: 0.1,
            return_scale: 1000.0,
        }
    }
}

impl TrainerConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if self.exploration_noise < 0.0
            || self.target_policy_noise < 0.0
            || self.target_noise_clip < 0.0
        {
            return bad("noise magnitudes must be non-negative");
        }
        if self.buffer_size == 0 || self.batch_size == 0 {
            return bad("buffer_size and batch_size must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be at least 1");
        }
        if !(self.return_scale > 0.0) {
            return bad("return_scale must be positive");
        }
        Ok(())
    }
}
