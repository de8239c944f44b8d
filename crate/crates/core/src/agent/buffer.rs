use super::policy::RawAction;
use crate::envs::Action;

/// One collected timestep as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// Observation fed to the policy (the triggered state when poisoned).
    pub obs: Vec<f64>,
    /// Action executed in the environment.
    pub action: Action,
    pub raw: RawAction,
    pub log_prob: f64,
    pub value: f64,
    /// Reward after any hook modification.
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
    /// `V(s_{t+1})` of the clean final state on truncation.
    pub bootstrap: Option<f64>,
    pub trigger_active: bool,
    pub overridden: bool,
}

/// On-policy rollout storage. Advantages and returns exist only after
/// [`RolloutBuffer::finalize`].
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    steps: Vec<Step>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
    finalized: bool,
}

impl RolloutBuffer {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            steps: Vec::with_capacity(n),
            ..Self::default()
        }
    }

    pub fn push(&mut self, step: Step) {
        assert!(!self.finalized, "push after finalize");
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Computes GAE advantages and returns-to-go. `last_value` bootstraps the
    /// step after the buffer when the final episode is still running.
    pub fn finalize(&mut self, last_value: f64, gamma: f64, lambda: f64) {
        let rewards: Vec<f64> = self.steps.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = self.steps.iter().map(|s| s.value).collect();
        let ends: Vec<EpisodeEnd> = self
            .steps
            .iter()
            .map(|s| {
                if s.done {
                    EpisodeEnd::Terminal
                } else if s.truncated {
                    EpisodeEnd::Truncated(s.bootstrap.unwrap_or(0.0))
                } else {
                    EpisodeEnd::Running
                }
            })
            .collect();
        self.advantages = gae(&rewards, &values, &ends, last_value, gamma, lambda);
        self.returns = self.advantages.iter().zip(&values).map(|(a, v)| a + v).collect();
        self.finalized = true;
    }

    pub fn advantages(&self) -> &[f64] {
        assert!(self.finalized, "advantages read before finalize");
        &self.advantages
    }

    pub fn returns(&self) -> &[f64] {
        assert!(self.finalized, "returns read before finalize");
        &self.returns
    }

    pub fn poisoned_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.trigger_active).count()
    }

    pub fn overridden_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.overridden).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpisodeEnd {
    Running,
    Terminal,
    /// Time limit hit; carries `V(s_{t+1})`.
    Truncated(f64),
}

/// Generalised advantage estimation over a single rollout.
pub fn gae(rewards: &[f64], values: &[f64], ends: &[EpisodeEnd], last_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    assert!(values.len() == n && ends.len() == n, "gae inputs differ in length");
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let (next_value, carry) = match ends[t] {
            EpisodeEnd::Running => (if t + 1 < n { values[t + 1] } else { last_value }, 1.0),
            EpisodeEnd::Terminal => (0.0, 0.0),
            EpisodeEnd::Truncated(v) => (v, 0.0),
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lambda * carry * running;
        adv[t] = running;
    }
    adv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_lambda_gamma_is_return_minus_baseline() {
        let rewards = [1.0, 2.0, 3.0, 4.0];
        let values = [0.5, -1.0, 2.0, 0.25];
        let ends = [EpisodeEnd::Running, EpisodeEnd::Terminal, EpisodeEnd::Running, EpisodeEnd::Running];
        let adv = gae(&rewards, &values, &ends, 10.0, 1.0, 1.0);
        let expected = [1.0 + 2.0 - 0.5, 2.0 - -1.0, 3.0 + 4.0 + 10.0 - 2.0, 4.0 + 10.0 - 0.25];
        for (a, e) in adv.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_bootstraps_final_value() {
        let adv = gae(&[1.0], &[0.0], &[EpisodeEnd::Truncated(5.0)], 99.0, 0.5, 0.9);
        assert!((adv[0] - 3.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn zero_lambda_is_one_step_td(
            data in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..30),
            last in -5.0f64..5.0,
        ) {
            let rewards: Vec<f64> = data.iter().map(|d| d.0).collect();
            let values: Vec<f64> = data.iter().map(|d| d.1).collect();
            let ends = vec![EpisodeEnd::Running; data.len()];
            let adv = gae(&rewards, &values, &ends, last, 0.9, 0.0);
            for t in 0..data.len() {
                let next = if t + 1 < data.len() { values[t + 1] } else { last };
                prop_assert!((adv[t] - (rewards[t] + 0.9 * next - values[t])).abs() < 1e-12);
            }
        }
    }
}
