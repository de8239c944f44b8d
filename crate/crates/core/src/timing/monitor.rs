use serde::Serialize;

use super::wilcoxon::wilcoxon_signed_rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    StayFrozen,
    Unfreeze,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FreezeSchedule {
    /// Wilcoxon comparison of consecutive windows of `window` scores.
    Adaptive { window: usize, alpha: f64 },
    /// Unfreeze once the training step counter reaches `at_step`; `None`
    /// never unfreezes.
    FixedStep { at_step: Option<u64> },
}

/// One evaluated window comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowTest {
    pub eval_index: usize,
    pub p_value: f64,
}

/// Tracks normal-task performance while the agent trains trigger-free and
/// decides when the freezing period ends.
///
/// Evaluations are recorded every `eval_interval` training steps. With the
/// adaptive schedule, after evaluation `t >= 2k` with `t % k == 0` the last two
/// windows of `k` scores are compared and the monitor unfreezes iff the
/// p-value exceeds `alpha`. Once unfrozen it stays unfrozen.
#[derive(Debug, Clone)]
pub struct FreezeMonitor {
    eval_interval: u64,
    schedule: FreezeSchedule,
    history: Vec<f64>,
    tests: Vec<WindowTest>,
    frozen: bool,
    unfrozen_at: Option<u64>,
}

impl FreezeMonitor {
    /// Panics if `window < 2` or `alpha` is outside `(0, 1)`; configs are
    /// validated before a monitor is built.
    pub fn adaptive(eval_interval: u64, window: usize, alpha: f64) -> Self {
        assert!(window >= 2, "window must be at least 2");
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        Self::with_schedule(eval_interval, FreezeSchedule::Adaptive { window, alpha })
    }

    pub fn with_schedule(eval_interval: u64, schedule: FreezeSchedule) -> Self {
        Self {
            eval_interval: eval_interval.max(1),
            schedule,
            history: Vec::new(),
            tests: Vec::new(),
            frozen: true,
            unfrozen_at: None,
        }
    }

    pub fn eval_interval(&self) -> u64 {
        self.eval_interval
    }

    pub fn schedule(&self) -> &FreezeSchedule {
        &self.schedule
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Every window comparison performed so far.
    pub fn p_trail(&self) -> &[WindowTest] {
        &self.tests
    }

    pub fn unfrozen_at(&self) -> Option<u64> {
        self.unfrozen_at
    }

    /// Whether the adaptive schedule wants evaluation scores.
    pub fn needs_evaluations(&self) -> bool {
        self.frozen && matches!(self.schedule, FreezeSchedule::Adaptive { .. })
    }

    /// Step-driven check; only fixed schedules react.
    pub fn check_step(&mut self, timestep: u64) -> Decision {
        if !self.frozen {
            return Decision::Unfreeze;
        }
        if let FreezeSchedule::FixedStep { at_step: Some(at) } = self.schedule {
            if timestep >= at {
                self.frozen = false;
                self.unfrozen_at = Some(timestep);
                return Decision::Unfreeze;
            }
        }
        Decision::StayFrozen
    }

    /// Appends one performance score taken at `timestep`.
    pub fn record_eval(&mut self, timestep: u64, score: f64) -> Decision {
        if !self.frozen {
            return Decision::Unfreeze;
        }
        self.history.push(score);
        let FreezeSchedule::Adaptive { window: k, alpha } = self.schedule else {
            return Decision::StayFrozen;
        };
        let t = self.history.len();
        if t < 2 * k || t % k != 0 {
            return Decision::StayFrozen;
        }
        let prev = &self.history[t - 2 * k..t - k];
        let curr = &self.history[t - k..t];
        // Scores are finite and windows have length k >= 2, so the test cannot fail.
        let p_value = wilcoxon_signed_rank(prev, curr).unwrap_or(1.0);
        self.tests.push(WindowTest { eval_index: t, p_value });
        if p_value > alpha {
            self.frozen = false;
            self.unfrozen_at = Some(timestep);
            Decision::Unfreeze
        } else {
            Decision::StayFrozen
        }
    }
}

/// Baseline that ends the freezing period at `ratio * total_steps`.
/// `ratio >= 1` never unfreezes within the run.
pub fn fixed_ratio_monitor(ratio: f64, total_steps: u64, eval_interval: u64) -> FreezeMonitor {
    let at_step = if ratio >= 1.0 {
        None
    } else {
        Some((ratio.max(0.0) * total_steps as f64).round() as u64)
    };
    FreezeMonitor::with_schedule(eval_interval, FreezeSchedule::FixedStep { at_step })
}
