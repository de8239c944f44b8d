use serde::{Deserialize, Serialize};

use super::policy::Squash;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ppo,
    A2c,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ppo => "ppo",
            Algorithm::A2c => "a2c",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppo" => Ok(Algorithm::Ppo),
            "a2c" => Ok(Algorithm::A2c),
            other => Err(Error::config("algo", format!("unknown algorithm `{other}` (expected ppo or a2c)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    Constant,
    /// Decays linearly to zero over `total_timesteps`.
    Linear,
}

/// Hyperparameters shared by the PPO and A2C trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub total_timesteps: u64,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    /// Rollout length per update.
    pub n_steps: usize,
    /// PPO minibatch size.
    pub batch_size: usize,
    /// PPO passes over each rollout.
    pub n_epochs: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub normalize_advantage: bool,
    pub adam_eps: f64,
    pub squash: Squash,
    pub log_std_init: f64,
    /// Episodes averaged into the log's `mean_return`.
    pub return_window: usize,
    /// Minimum timesteps between training-log rows.
    pub log_interval: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self::ppo()
    }
}

impl TrainerConfig {
    pub fn ppo() -> Self {
        Self {
            total_timesteps: 200_000,
            hidden: vec![64, 64],
            learning_rate: 3e-4,
            lr_schedule: LrSchedule::Constant,
            n_steps: 2048,
            batch_size: 64,
            n_epochs: 10,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            ent_coef: 0.0,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            normalize_advantage: true,
            adam_eps: 1e-8,
            squash: Squash::Tanh,
            log_std_init: 0.0,
            return_window: 100,
            log_interval: 2048,
        }
    }

    pub fn a2c() -> Self {
        Self {
            total_timesteps: 500_000,
            learning_rate: 7e-4,
            n_steps: 5,
            batch_size: 5,
            n_epochs: 1,
            gae_lambda: 1.0,
            normalize_advantage: false,
            adam_eps: 1e-5,
            ..Self::ppo()
        }
    }

    pub fn for_algorithm(algo: Algorithm) -> Self {
        match algo {
            Algorithm::Ppo => Self::ppo(),
            Algorithm::A2c => Self::a2c(),
        }
    }

    /// Per-environment presets in the spirit of the tuned zoo settings.
    pub fn preset(algo: Algorithm, env: &str) -> Self {
        let mut cfg = Self::for_algorithm(algo);
        match (algo, env) {
            (Algorithm::Ppo, "pendulum") => {
                cfg.total_timesteps = 300_000;
                cfg.n_steps = 4096;
                cfg.gamma = 0.9;
                cfg.learning_rate = 1e-3;
                cfg.log_interval = 4096;
            }
            (Algorithm::Ppo, "mountaincar") => {
                cfg.n_steps = 1024;
                cfg.gamma = 0.99;
                cfg.gae_lambda = 0.98;
                cfg.n_epochs = 4;
                cfg.log_interval = 1024;
            }
            (Algorithm::Ppo, "acrobot") => {
                cfg.n_steps = 1024;
                cfg.gae_lambda = 0.94;
                cfg.n_epochs = 4;
                cfg.log_interval = 1024;
            }
            (Algorithm::A2c, "pendulum") => {
                cfg.total_timesteps = 300_000;
                cfg.gamma = 0.9;
                cfg.n_steps = 8;
                cfg.batch_size = 8;
            }
            _ => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let f = |field: &str, msg: &str| Err(Error::config(format!("trainer.{field}"), msg));
        if self.total_timesteps == 0 {
            return f("total_timesteps", "must be positive");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return f("hidden", "layer widths must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return f("learning_rate", "must be a positive finite number");
        }
        if self.n_steps == 0 {
            return f("n_steps", "must be positive");
        }
        if self.batch_size == 0 || self.batch_size > self.n_steps {
            return f("batch_size", "must be in 1..=n_steps");
        }
        if self.n_epochs == 0 {
            return f("n_epochs", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return f("gamma", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return f("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.clip_range > 0.0 && self.clip_range < 1.0) {
            return f("clip_range", "must lie in (0, 1)");
        }
        if !(self.ent_coef >= 0.0 && self.vf_coef >= 0.0) {
            return f("ent_coef", "loss coefficients must be non-negative");
        }
        if !(self.max_grad_norm > 0.0) {
            return f("max_grad_norm", "must be positive");
        }
        if !(self.adam_eps > 0.0) {
            return f("adam_eps", "must be positive");
        }
        if !self.log_std_init.is_finite() {
            return f("log_std_init", "must be finite");
        }
        if self.return_window == 0 {
            return f("return_window", "must be positive");
        }
        Ok(())
    }

    /// Learning rate after `t` of `total_timesteps` steps.
    pub fn lr_at(&self, t: u64) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Linear => {
                let progress = (t as f64 / self.total_timesteps as f64).min(1.0);
                self.learning_rate * (1.0 - progress)
            }
        }
    }
}
