use serde::{Deserialize, Serialize};

use crate::envs::{Action, ActionSpace};
use crate::error::{Error, Result};
use crate::evalkit::action_hits;

/// Poisoning settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImplantConfig {
    /// With `false` the run is plain clean training.
    pub enabled: bool,
    /// Initial attack interval `SI_attack` in timesteps.
    pub si_init: f64,
    pub si_min: f64,
    /// Adapt `SI_attack` from ASR / NTP estimates.
    pub adapt: bool,
    pub asr_target: f64,
    pub ntp_target: f64,
    /// Override every `p_tamper`-th triggered action with the target.
    pub p_tamper: u64,
    pub action_override: bool,
    pub reward_poison: bool,
    /// `eps_action` as a fraction of the action-box diameter.
    pub eps_action_scale: f64,
    /// Target action; defaults to index 0 or the lower corner of the box.
    pub target: Option<Action>,
    /// Episodes used for each ASR and NTP estimate during poisoning.
    pub adapt_episodes: usize,
}

impl Default for ImplantConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            si_init: 200.0,
            si_min: 1.0,
            adapt: true,
            asr_target: 0.95,
            ntp_target: 0.9,
            p_tamper: 2,
            action_override: true,
            reward_poison: true,
            eps_action_scale: 0.1,
            target: None,
            adapt_episodes: 5,
        }
    }
}

impl ImplantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.si_min >= 1.0) {
            return Err(Error::config("implant.si_min", "must be at least 1"));
        }
        if !(self.si_init >= self.si_min && self.si_init.is_finite()) {
            return Err(Error::config("implant.si_init", "must be finite and at least si_min"));
        }
        if !(self.asr_target > 0.0 && self.asr_target <= 1.0) {
            return Err(Error::config("implant.asr_target", "must lie in (0, 1]"));
        }
        if !(self.ntp_target > 0.0 && self.ntp_target <= 1.0) {
            return Err(Error::config("implant.ntp_target", "must lie in (0, 1]"));
        }
        if self.p_tamper == 0 {
            return Err(Error::config("implant.p_tamper", "must be at least 1"));
        }
        if !(self.eps_action_scale >= 0.0 && self.eps_action_scale.is_finite()) {
            return Err(Error::config("implant.eps_action_scale", "must be non-negative"));
        }
        if self.adapt_episodes == 0 {
            return Err(Error::config("implant.adapt_episodes", "must be positive"));
        }
        Ok(())
    }

    pub fn validate_for(&self, space: &ActionSpace) -> Result<()> {
        self.validate()?;
        if let Some(t) = &self.target {
            if !space.contains(t) {
                return Err(Error::config("implant.target", format!("{t:?} is not in {space:?}")));
            }
        }
        Ok(())
    }

    pub fn target_for(&self, space: &ActionSpace) -> Action {
        self.target.clone().unwrap_or_else(|| default_target(space))
    }

    pub fn eps_action_for(&self, space: &ActionSpace) -> f64 {
        match space {
            ActionSpace::Discrete { .. } => 0.0,
            ActionSpace::Continuous { .. } => self.eps_action_scale * space.width(),
        }
    }
}

/// Action 0 for discrete spaces, the lower corner of a box otherwise.
pub fn default_target(space: &ActionSpace) -> Action {
    match space {
        ActionSpace::Discrete { .. } => Action::Discrete(0),
        ActionSpace::Continuous { low, .. } => Action::Continuous(low.clone()),
    }
}

/// Poisoned reward `r_h`: the largest positive per-step reward seen while
/// frozen, else the magnitude of the most negative one, else 1.
pub fn poisoned_reward_value(max_reward: f64, min_reward: f64) -> f64 {
    if max_reward > 0.0 {
        max_reward
    } else if min_reward < 0.0 {
        min_reward.abs()
    } else {
        1.0
    }
}

/// Mutable implantation state of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub si_attack: f64,
    pub si_min: f64,
    pub asr_target: f64,
    pub ntp_target: f64,
    pub asr_curr: Option<f64>,
    pub ntp_curr: Option<f64>,
    pub n_tamper: u64,
    pub p_tamper: u64,
    pub r_h: f64,
    pub eps_action: f64,
    pub target: Action,
    pub action_override: bool,
    pub reward_poison: bool,
    /// Steps accumulated toward the next injection.
    pub phase: f64,
    pub activations: u64,
    pub overrides: u64,
    pub poisoned_rewards: u64,
}

impl AttackSchedule {
    pub fn new(cfg: &ImplantConfig, target: Action, r_h: f64, eps_action: f64) -> Self {
        Self {
            si_attack: cfg.si_init,
            si_min: cfg.si_min,
            asr_target: cfg.asr_target,
            ntp_target: cfg.ntp_target,
            asr_curr: None,
            ntp_curr: None,
            n_tamper: 0,
            p_tamper: cfg.p_tamper,
            r_h,
            eps_action,
            target,
            action_override: cfg.action_override,
            reward_poison: cfg.reward_poison,
            phase: 0.0,
            activations: 0,
            overrides: 0,
            poisoned_rewards: 0,
        }
    }

    /// Advances one step; true when this step carries a trigger. Fractional
    /// intervals accumulate, so the long-run rate is exactly `1 / SI_attack`.
    pub fn tick(&mut self) -> bool {
        self.phase += 1.0;
        if self.phase >= self.si_attack {
            self.phase -= self.si_attack;
            if self.phase >= self.si_attack {
                self.phase %= self.si_attack;
            }
            self.activations += 1;
            true
        } else {
            false
        }
    }

    /// Shortens the interval when ASR is far below target, otherwise
    /// lengthens it when NTP is far below target.
    pub fn adapt_frequency(&mut self, asr_curr: f64, ntp_curr: f64) -> f64 {
        self.asr_curr = Some(asr_curr);
        self.ntp_curr = Some(ntp_curr);
        if asr_curr < 0.5 * self.asr_target {
            self.si_attack /= 1.0 + (self.asr_target - asr_curr);
        } else if ntp_curr < 0.5 * self.ntp_target {
            self.si_attack *= 1.0 + (self.ntp_target - ntp_curr);
        }
        self.si_attack = self.si_attack.max(self.si_min);
        self.si_attack
    }

    /// Returns the action to execute and whether it was overridden.
    pub fn manipulate_action(&mut self, proposed: &Action, trigger_active: bool) -> (Action, bool) {
        if !trigger_active {
            return (proposed.clone(), false);
        }
        let fire = self.action_override && self.n_tamper % self.p_tamper == 0;
        self.n_tamper += 1;
        if fire {
            self.overrides += 1;
            (self.target.clone(), true)
        } else {
            (proposed.clone(), false)
        }
    }

    pub fn modify_reward(&mut self, reward: f64, trigger_active: bool, action: &Action) -> f64 {
        if self.reward_poison && trigger_active && action_hits(action, &self.target, self.eps_action) {
            self.poisoned_rewards += 1;
            self.r_h
        } else {
            reward
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schedule(p_tamper: u64) -> AttackSchedule {
        let cfg = ImplantConfig {
            si_init: 100.0,
            asr_target: 0.9,
            ntp_target: 0.9,
            p_tamper,
            ..ImplantConfig::default()
        };
        AttackSchedule::new(&cfg, Action::Discrete(0), 1.0, 0.0)
    }

    #[test]
    fn frequency_rules() {
        let mut s = schedule(2);
        assert!((s.adapt_frequency(0.4, 1.0) - 100.0 / 1.5).abs() < 1e-12);
        let mut s = schedule(2);
        assert!((s.adapt_frequency(0.8, 0.4) - 150.0).abs() < 1e-12);
        let mut s = schedule(2);
        assert_eq!(s.adapt_frequency(0.9, 0.9), 100.0);
        let mut s = schedule(2);
        s.si_attack = 1.2;
        assert_eq!(s.adapt_frequency(0.0, 1.0), 1.0);
    }

    #[test]
    fn tamper_period() {
        let mut s = schedule(1);
        assert!((0..5).all(|_| s.manipulate_action(&Action::Discrete(1), true).1));
        let mut s = schedule(5);
        let n = (0..5).filter(|_| s.manipulate_action(&Action::Discrete(1), true).1).count();
        assert_eq!(n, 1);
        let before = s.n_tamper;
        assert_eq!(s.manipulate_action(&Action::Discrete(1), false), (Action::Discrete(1), false));
        assert_eq!(s.n_tamper, before);
    }

    #[test]
    fn reward_rules() {
        let mut s = schedule(2);
        assert_eq!(s.modify_reward(-3.0, true, &Action::Discrete(0)), 1.0);
        assert_eq!(s.modify_reward(-3.0, false, &Action::Discrete(0)), -3.0);
        assert_eq!(s.modify_reward(-3.0, true, &Action::Discrete(1)), -3.0);
        let mut c = AttackSchedule::new(&ImplantConfig::default(), Action::Continuous(vec![-2.0]), 5.0, 0.1);
        assert_eq!(c.modify_reward(-1.0, true, &Action::Continuous(vec![-1.95])), 5.0);
        assert_eq!(c.modify_reward(-1.0, true, &Action::Continuous(vec![-1.5])), -1.0);
    }

    #[test]
    fn r_h_fallbacks() {
        assert_eq!(poisoned_reward_value(1.0, 1.0), 1.0);
        assert_eq!(poisoned_reward_value(-0.1, -16.2), 16.2);
        assert_eq!(poisoned_reward_value(0.0, -1.0), 1.0);
    }

    #[test]
    fn default_targets() {
        assert_eq!(default_target(&ActionSpace::Discrete { n: 3 }), Action::Discrete(0));
        let space = ActionSpace::Continuous {
            low: vec![-2.0],
            high: vec![2.0],
        };
        assert_eq!(default_target(&space), Action::Continuous(vec![-2.0]));
        assert!((ImplantConfig::default().eps_action_for(&space) - 0.4).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn injections_follow_accumulated_interval(si in 1.0f64..50.0, steps in 1usize..2000) {
            let mut s = schedule(2);
            s.si_attack = si;
            let fired = (0..steps).filter(|_| s.tick()).count();
            prop_assert_eq!(fired, (steps as f64 / si + 1e-9).floor() as usize);
        }

        #[test]
        fn overrides_match_counter(p in 1u64..7, pattern in prop::collection::vec(any::<bool>(), 0..200)) {
            let mut s = schedule(p);
            let mut expected = 0;
            for active in pattern {
                if active && s.n_tamper % p == 0 {
                    expected += 1;
                }
                s.manipulate_action(&Action::Discrete(1), active);
            }
            prop_assert_eq!(s.overrides, expected);
        }

        #[test]
        fn si_never_below_floor(updates in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..100)) {
            let mut s = schedule(2);
            for (a, n) in updates {
                prop_assert!(s.adapt_frequency(a, n) >= 1.0);
            }
        }
    }
}
