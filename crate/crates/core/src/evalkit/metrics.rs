use serde::{Deserialize, Serialize};

use crate::agent::Policy;
use crate::envs::{Action, Env};
use crate::error::{Error, Result};
use crate::magnitude::TriggerSpec;
use crate::numerics::Rng;

/// Noise levels of the robustness sweep, in units of each dimension's range
/// width.
pub const NOISE_LEVELS: [f64; 6] = [0.0, 0.01, 0.03, 0.05, 0.07, 0.10];

const STREAM_EPISODES: u64 = 10;
const STREAM_NOISE: u64 = 11;

/// Harmonic mean of NTP and ASR; 0 when both are 0. Works in either
/// fractional or percentage units.
pub fn bus(ntp: f64, asr: f64) -> f64 {
    if ntp + asr <= 0.0 {
        0.0
    } else {
        2.0 * ntp * asr / (ntp + asr)
    }
}

/// `(ret - p_l) / (p_u - p_l)` clamped to `[0, 1]`.
pub fn normalized_return(ret: f64, p_u: f64, p_l: f64) -> f64 {
    ((ret - p_l) / (p_u - p_l)).clamp(0.0, 1.0)
}

pub fn ntp_from_returns(returns: &[f64], p_u: f64, p_l: f64) -> Result<f64> {
    if !(p_u > p_l) {
        return Err(Error::Domain(format!("normalisation bounds need P_u > P_l, got {p_u} <= {p_l}")));
    }
    if returns.is_empty() {
        return Err(Error::Domain("no episodes to normalise".into()));
    }
    Ok(returns.iter().map(|&r| normalized_return(r, p_u, p_l)).sum::<f64>() / returns.len() as f64)
}

/// Decision rule under evaluation.
pub trait Actor {
    fn decide(&mut self, state: &[f64]) -> Result<Action>;
}

impl<F: FnMut(&[f64]) -> Result<Action>> Actor for F {
    fn decide(&mut self, state: &[f64]) -> Result<Action> {
        self(state)
    }
}

/// Mode / mean action of a policy.
#[derive(Debug, Clone, Copy)]
pub struct DeterministicActor<'a>(pub &'a Policy);

impl Actor for DeterministicActor<'_> {
    fn decide(&mut self, state: &[f64]) -> Result<Action> {
        self.0.deterministic_action(state)
    }
}

fn run_clean_episode(env: &mut dyn Env, actor: &mut dyn Actor, seed: u64) -> Result<f64> {
    let space = env.spec().action_space.clone();
    let mut state = env.reset(seed);
    let mut total = 0.0;
    loop {
        let a = space.clip(actor.decide(&state)?);
        let tr = env.step(&a)?;
        total += tr.reward;
        if tr.ended() {
            return Ok(total);
        }
        state = tr.next_state;
    }
}

/// Normalised clean return over `n_eval` episodes. Returns the NTP and the
/// raw episode returns.
pub fn eval_ntp(env: &mut dyn Env, actor: &mut dyn Actor, n_eval: usize, p_u: f64, p_l: f64, seed: u64) -> Result<(f64, Vec<f64>)> {
    let mut rng = Rng::with_stream(seed, STREAM_EPISODES);
    let returns = (0..n_eval)
        .map(|_| run_clean_episode(env, actor, rand::RngCore::next_u64(&mut rng)))
        .collect::<Result<Vec<f64>>>()?;
    Ok((ntp_from_returns(&returns, p_u, p_l)?, returns))
}

/// ASR protocol settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsrConfig {
    /// Trigger activations measured.
    pub n_activations: usize,
    /// Episodes the activations are spread over.
    pub n_episodes: usize,
    /// Steps between activations within an episode.
    pub interval: usize,
    /// Std of the Gaussian noise added to triggered states, as a fraction
    /// of each dimension's range width.
    pub sigma: f64,
}

impl Default for AsrConfig {
    fn default() -> Self {
        Self {
            n_activations: 100,
            n_episodes: 10,
            interval: 20,
            sigma: 0.0,
        }
    }
}

impl AsrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_activations == 0 {
            return Err(Error::config("eval.n_activations", "must be at least 1"));
        }
        if self.n_episodes == 0 {
            return Err(Error::config("eval.n_episodes", "must be at least 1"));
        }
        if self.interval == 0 {
            return Err(Error::config("eval.interval", "must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("eval.sigma", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrOutcome {
    pub asr: f64,
    pub activations: usize,
    pub hits: usize,
    /// Triggered states that received noise before reaching the actor.
    pub noise_applications: usize,
    pub episodes: usize,
}

/// Whether `action` counts as the target: equality for discrete actions,
/// Euclidean distance at most `eps_action` for continuous ones.
pub fn action_hits(action: &Action, target: &Action, eps_action: f64) -> bool {
    match (action, target) {
        (Action::Discrete(a), Action::Discrete(t)) => a == t,
        (Action::Continuous(a), Action::Continuous(t)) => {
            a.len() == t.len() && a.iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() <= eps_action
        }
        _ => false,
    }
}

/// Attack success rate: every `interval` steps of an evaluation episode the
/// trigger (plus optional noise) is written into the state, the actor's
/// decision on that state is scored against the target and executed.
pub fn eval_asr(
    env: &mut dyn Env,
    actor: &mut dyn Actor,
    trigger: &TriggerSpec,
    eps_action: f64,
    cfg: &AsrConfig,
    seed: u64,
) -> Result<AsrOutcome> {
    cfg.validate()?;
    let space = env.spec().action_space.clone();
    let widths: Vec<f64> = env.spec().state_bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let mut episode_rng = Rng::with_stream(seed, STREAM_EPISODES);
    let mut noise_rng = Rng::with_stream(seed, STREAM_NOISE);
    let per_episode = cfg.n_activations.div_ceil(cfg.n_episodes);
    let max_episodes = cfg.n_episodes * 10 + cfg.n_activations;
    let (mut activations, mut hits, mut noisy, mut episodes) = (0usize, 0usize, 0usize, 0usize);

    while activations < cfg.n_activations {
        if episodes >= max_episodes {
            return Err(Error::Domain(format!(
                "collected only {activations} of {} trigger activations in {episodes} episodes",
                cfg.n_activations
            )));
        }
        episodes += 1;
        let mut state = env.reset(rand::RngCore::next_u64(&mut episode_rng));
        let mut in_episode = 0usize;
        let mut k = 0usize;
        loop {
            k += 1;
            let fire = k % cfg.interval == 0 && in_episode < per_episode && activations < cfg.n_activations;
            let action = if fire {
                let mut s = trigger.inject(&state);
                if cfg.sigma > 0.0 {
                    for (x, w) in s.iter_mut().zip(&widths) {
                        *x += cfg.sigma * w * noise_rng.normal();
                    }
                    noisy += 1;
                }
                let a = actor.decide(&s)?;
                in_episode += 1;
                activations += 1;
                if action_hits(&a, &trigger.target, eps_action) {
                    hits += 1;
                }
                a
            } else {
                actor.decide(&state)?
            };
            let tr = env.step(&space.clip(action))?;
            if tr.ended() {
                break;
            }
            state = tr.next_state;
        }
    }
    Ok(AsrOutcome {
        asr: hits as f64 / activations as f64,
        activations,
        hits,
        noise_applications: noisy,
        episodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub sigma: f64,
    pub asr: f64,
    pub bus: f64,
}

/// ASR and BUS at each noise level, with common random numbers across
/// levels. NTP is measured on clean episodes and does not depend on sigma.
pub fn noise_sweep(
    env: &mut dyn Env,
    actor: &mut dyn Actor,
    trigger: &TriggerSpec,
    eps_action: f64,
    ntp: f64,
    sigmas: &[f64],
    base: &AsrConfig,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    sigmas
        .iter()
        .map(|&sigma| {
            let cfg = AsrConfig { sigma, ..base.clone() };
            let out = eval_asr(env, actor, trigger, eps_action, &cfg, seed)?;
            Ok(NoiseRow {
                sigma,
                asr: out.asr,
                bus: bus(ntp, out.asr),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;

    #[test]
    fn bus_arithmetic() {
        assert_eq!(bus(0.0, 0.7), 0.0);
        assert_eq!(bus(0.0, 0.0), 0.0);
        assert!((bus(0.8, 0.8) - 0.8).abs() < 1e-15);
        assert!((bus(94.42, 94.78) - 94.60).abs() < 0.01);
    }

    #[test]
    fn ntp_bounds() {
        assert_eq!(ntp_from_returns(&[500.0, 500.0], 500.0, 20.0).unwrap(), 1.0);
        assert_eq!(ntp_from_returns(&[20.0], 500.0, 20.0).unwrap(), 0.0);
        assert_eq!(ntp_from_returns(&[20.0, 500.0], 500.0, 20.0).unwrap(), 0.5);
        assert_eq!(ntp_from_returns(&[900.0, -100.0], 500.0, 20.0).unwrap(), 0.5);
        assert!(ntp_from_returns(&[1.0], 1.0, 1.0).is_err());
    }

    fn cartpole_trigger() -> TriggerSpec {
        TriggerSpec::new(vec![2], vec![0.1], Action::Discrete(0), vec![(-0.418, 0.418)]).unwrap()
    }

    #[test]
    fn hardwired_agent_has_full_asr() {
        let mut env = envs::make("cartpole").unwrap();
        let mut actor = |_: &[f64]| Ok(Action::Discrete(0));
        let cfg = AsrConfig {
            interval: 1,
            ..AsrConfig::default()
        };
        let out = eval_asr(env.as_mut(), &mut actor, &cartpole_trigger(), 0.0, &cfg, 1).unwrap();
        assert_eq!(out.asr, 1.0);
        assert_eq!(out.activations, 100);
    }

    #[test]
    fn counts_partial_hits() {
        // hits on three of every four activations
        let mut env = envs::make("cartpole").unwrap();
        let mut calls = 0usize;
        let mut actor = |s: &[f64]| {
            if s[2] == 0.1 {
                calls += 1;
                Ok(Action::Discrete(if calls % 4 == 0 { 1 } else { 0 }))
            } else {
                Ok(Action::Discrete(if s[2] > 0.0 { 1 } else { 0 }))
            }
        };
        let cfg = AsrConfig {
            n_activations: 4,
            n_episodes: 1,
            ..AsrConfig::default()
        };
        let out = eval_asr(env.as_mut(), &mut actor, &cartpole_trigger(), 0.0, &cfg, 2).unwrap();
        assert_eq!((out.activations, out.hits), (4, 3));
        assert_eq!(out.asr, 0.75);
    }

    #[test]
    fn random_agent_is_near_half() {
        let mut env = envs::make("cartpole").unwrap();
        let mut rng = Rng::new(3);
        let mut actor = |_: &[f64]| Ok(Action::Discrete(rng.below(2)));
        let cfg = AsrConfig {
            n_activations: 200,
            interval: 2,
            ..AsrConfig::default()
        };
        let out = eval_asr(env.as_mut(), &mut actor, &cartpole_trigger(), 0.0, &cfg, 4).unwrap();
        assert!((out.asr - 0.5).abs() < 0.1, "asr {}", out.asr);
    }

    #[test]
    fn known_hit_rate_within_binomial_bounds() {
        let p = 0.7;
        let mut env = envs::make("cartpole").unwrap();
        let mut rng = Rng::new(5);
        let mut actor = |s: &[f64]| {
            if s[2] == 0.1 {
                Ok(Action::Discrete(if rng.uniform() < p { 0 } else { 1 }))
            } else {
                Ok(Action::Discrete(if s[2] + 0.5 * s[3] > 0.0 { 1 } else { 0 }))
            }
        };
        let cfg = AsrConfig {
            n_activations: 1000,
            n_episodes: 50,
            ..AsrConfig::default()
        };
        let out = eval_asr(env.as_mut(), &mut actor, &cartpole_trigger(), 0.0, &cfg, 6).unwrap();
        let sd = (p * (1.0 - p) / 1000.0f64).sqrt();
        assert!((out.asr - p).abs() < 3.0 * sd, "asr {}", out.asr);
    }

    #[test]
    fn noise_reaches_only_triggered_states() {
        let mut env = envs::make("cartpole").unwrap();
        let mut seen_trigger_exact = 0usize;
        let mut actor = |s: &[f64]| {
            if s[2] == 0.1 {
                seen_trigger_exact += 1;
            }
            Ok(Action::Discrete(if s[2] + 0.5 * s[3] > 0.0 { 1 } else { 0 }))
        };
        let cfg = AsrConfig {
            sigma: 0.05,
            ..AsrConfig::default()
        };
        let out = eval_asr(env.as_mut(), &mut actor, &cartpole_trigger(), 0.0, &cfg, 7).unwrap();
        assert_eq!(out.noise_applications, out.activations);
        assert_eq!(seen_trigger_exact, 0);
    }

    #[test]
    fn zero_noise_matches_baseline() {
        let mut env = envs::make("cartpole").unwrap();
        let mut actor = |s: &[f64]| Ok(Action::Discrete(if s[2] + 0.5 * s[3] > 0.0 { 1 } else { 0 }));
        let trigger = cartpole_trigger();
        let base = eval_asr(env.as_mut(), &mut actor, &trigger, 0.0, &AsrConfig::default(), 8).unwrap();
        let rows = noise_sweep(env.as_mut(), &mut actor, &trigger, 0.0, 0.9, &NOISE_LEVELS, &AsrConfig::default(), 8).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].asr, base.asr);
        assert_eq!(rows[0].bus, bus(0.9, base.asr));
    }

    #[test]
    fn continuous_tolerance() {
        let t = Action::Continuous(vec![-2.0]);
        assert!(action_hits(&Action::Continuous(vec![-1.95]), &t, 0.1));
        assert!(!action_hits(&Action::Continuous(vec![-1.8]), &t, 0.1));
    }
}
