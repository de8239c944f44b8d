use serde::{Deserialize, Serialize};

use super::monitor::{fixed_ratio_monitor, FreezeMonitor};
use crate::agent::ActionMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Deterministic,
    Stochastic,
}

impl From<EvalMode> for ActionMode {
    fn from(m: EvalMode) -> Self {
        match m {
            EvalMode::Deterministic => ActionMode::Deterministic,
            EvalMode::Stochastic => ActionMode::Stochastic,
        }
    }
}

/// Freezing-period settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    /// Training steps between performance evaluations (`T_eval`).
    pub eval_interval: u64,
    /// Window size `k` of the signed-rank comparison.
    pub window: usize,
    /// Significance level: unfreeze when `p > alpha`.
    pub alpha: f64,
    /// Episodes averaged into one performance score.
    pub eval_episodes: usize,
    pub eval_mode: EvalMode,
    /// Replaces the adaptive rule by unfreezing at this fraction of the run.
    pub fixed_ratio: Option<f64>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            eval_interval: 5000,
            window: 5,
            alpha: 0.05,
            eval_episodes: 5,
            eval_mode: EvalMode::Deterministic,
            fixed_ratio: None,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_interval == 0 {
            return Err(Error::config("timing.eval_interval", "must be positive"));
        }
        if self.window < 2 {
            return Err(Error::config("timing.window", "must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("timing.alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("timing.eval_episodes", "must be positive"));
        }
        if let Some(r) = self.fixed_ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config("timing.fixed_ratio", format!("must lie in [0, 1], got {r}")));
            }
        }
        Ok(())
    }

    pub fn monitor(&self, total_steps: u64) -> FreezeMonitor {
        match self.fixed_ratio {
            Some(r) => fixed_ratio_monitor(r, total_steps, self.eval_interval),
            None => FreezeMonitor::adaptive(self.eval_interval, self.window, self.alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_out_of_range_names_field() {
        let cfg = TimingConfig {
            alpha: 1.5,
            ..TimingConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("timing.alpha"));
    }

    #[test]
    fn fixed_ratio_monitor_is_built() {
        let cfg = TimingConfig {
            fixed_ratio: Some(0.5),
            ..TimingConfig::default()
        };
        let mut m = cfg.monitor(100_000);
        assert!(!m.needs_evaluations());
        assert_eq!(m.check_step(49_999), crate::timing::Decision::StayFrozen);
        assert_eq!(m.check_step(50_000), crate::timing::Decision::Unfreeze);
    }
}
