use super::policy::Policy;
use crate::envs::{Action, Transition};
use crate::error::Result;

/// Attack-side view reported into the training log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HookStatus {
    pub si_attack: Option<f64>,
    pub asr_curr: Option<f64>,
    pub ntp_curr: Option<f64>,
    /// Free-form events since the last drain, e.g. `unfreeze`.
    pub events: Vec<String>,
}

/// Callbacks through which a training-time attack touches a trainer.
///
/// Trainers call, for every timestep `t` (1-based):
/// `observe` before acting, `choose` after sampling, `reward` after the
/// environment step and `after_step` once the transition is complete.
/// Default methods are no-ops that draw nothing from any RNG, so a trainer
/// driven by [`NoHooks`] follows exactly the clean trajectory.
pub trait ImplantHooks {
    /// Returns the triggered state when a trigger is injected at this step.
    fn observe(&mut self, _t: u64, _state: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Returns a replacement for the sampled action.
    fn choose(&mut self, _proposed: &Action, _trigger_active: bool) -> Option<Action> {
        None
    }

    fn reward(&mut self, reward: f64, _trigger_active: bool, _action: &Action) -> f64 {
        reward
    }

    /// Sees the clean environment transition and the current policy.
    fn after_step(&mut self, _t: u64, _policy: &Policy, _transition: &Transition) -> Result<()> {
        Ok(())
    }

    fn drain_status(&mut self) -> HookStatus {
        HookStatus::default()
    }
}

/// Clean training.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHooks;

impl ImplantHooks for NoHooks {}
