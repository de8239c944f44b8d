use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use super::buffer::{RolloutBuffer, Step};
use super::config::{Algorithm, TrainerConfig};
use super::hooks::ImplantHooks;
use super::log::{LogRow, TrainingLog};
use super::policy::{Policy, Squash};
use super::value::ValueFn;
use crate::envs::{Action, Env, EnvSpec};
use crate::error::{Error, Result};
use crate::numerics::{clip_grad_norm, read_checkpoint, write_checkpoint, Adam, AdamConfig, Rng};

const STREAM_INIT: u64 = 0;
const STREAM_ACT: u64 = 1;
const STREAM_EPISODES: u64 = 2;
const STREAM_MINIBATCH: u64 = 3;

/// Policy plus critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub policy: Policy,
    pub value: ValueFn,
}

impl Agent {
    pub fn new(spec: &EnvSpec, cfg: &TrainerConfig, rng: &mut Rng) -> Result<Self> {
        let mut policy = Policy::new(spec.state_dim, &spec.action_space, &cfg.hidden, cfg.squash, rng)?;
        policy.log_std_mut().iter_mut().for_each(|x| *x = cfg.log_std_init);
        let value = ValueFn::new(spec.state_dim, &cfg.hidden, rng)?;
        Ok(Self { policy, value })
    }

    /// Fresh agent whose initial weights depend only on `seed`.
    pub fn seeded(spec: &EnvSpec, cfg: &TrainerConfig, seed: u64) -> Result<Self> {
        Self::new(spec, cfg, &mut Rng::with_stream(seed, STREAM_INIT))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write_checkpoint(w, &[(self.policy.net(), self.policy.log_std()), (self.value.net(), &[])])
    }

    pub fn read<R: Read>(r: &mut R, spec: &EnvSpec, squash: Squash) -> Result<Self> {
        let mut records = read_checkpoint(r)?.into_iter();
        let (Some((pnet, log_std)), Some((vnet, _)), None) = (records.next(), records.next(), records.next()) else {
            return Err(Error::Checkpoint("agent checkpoints hold exactly two networks".into()));
        };
        if pnet.input_dim() != spec.state_dim || vnet.input_dim() != spec.state_dim {
            return Err(Error::Checkpoint(format!("checkpoint state dimension does not match {}", spec.name)));
        }
        let mut policy = Policy::from_net(pnet, &spec.action_space, squash)?;
        if log_std.len() != policy.log_std().len() {
            return Err(Error::Checkpoint("log-std length does not match the action space".into()));
        }
        policy.log_std_mut().copy_from_slice(&log_std);
        Ok(Self {
            policy,
            value: ValueFn::from_net(vnet)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, spec: &EnvSpec, squash: Squash) -> Result<Self> {
        Self::read(&mut std::io::BufReader::new(std::fs::File::open(path)?), spec, squash)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub log: TrainingLog,
    pub timesteps: u64,
    pub episodes: u64,
}

/// Clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)` and its derivative
/// with respect to `r`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Trains with PPO; `seed` drives action sampling, episode resets and
/// minibatch shuffling.
pub fn train_ppo(
    env: &mut dyn Env,
    agent: Agent,
    hooks: &mut dyn ImplantHooks,
    cfg: &TrainerConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    train(Algorithm::Ppo, env, agent, hooks, cfg, seed)
}

/// Trains with synchronous advantage actor-critic: one gradient step per
/// `n_steps` rollout, no ratio clipping.
pub fn train_a2c(
    env: &mut dyn Env,
    agent: Agent,
    hooks: &mut dyn ImplantHooks,
    cfg: &TrainerConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    train(Algorithm::A2c, env, agent, hooks, cfg, seed)
}

pub fn train(
    algo: Algorithm,
    env: &mut dyn Env,
    mut agent: Agent,
    hooks: &mut dyn ImplantHooks,
    cfg: &TrainerConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let spec = env.spec().clone();
    if agent.policy.state_dim() != spec.state_dim {
        return Err(Error::Shape(format!(
            "agent expects {} state dims, {} has {}",
            agent.policy.state_dim(),
            spec.name,
            spec.state_dim
        )));
    }
    let mut runner = Runner::new(env, seed, cfg.return_window);
    let mut opt = Optimizers::new(&agent, cfg);
    let mut shuffle_rng = Rng::with_stream(seed, STREAM_MINIBATCH);
    let mut log = TrainingLog::default();
    let mut pending = UpdateStats::default();
    let mut last_logged = 0u64;

    while runner.t < cfg.total_timesteps {
        let n = cfg.n_steps.min((cfg.total_timesteps - runner.t) as usize);
        let lr = cfg.lr_at(runner.t);
        let mut buf = runner.collect(&agent, hooks, n)?;
        let last_value = agent.value.value(&runner.state)?;
        buf.finalize(last_value, cfg.gamma, cfg.gae_lambda);
        let stats = match algo {
            Algorithm::Ppo => ppo_update(&mut agent, &mut opt, &buf, cfg, lr, &mut shuffle_rng)?,
            Algorithm::A2c => a2c_update(&mut agent, &mut opt, &buf, cfg, lr)?,
        };
        pending.merge(&stats);
        if runner.t - last_logged >= cfg.log_interval || runner.t >= cfg.total_timesteps {
            let status = hooks.drain_status();
            log.rows.push(LogRow {
                timestep: runner.t,
                mean_return: runner.mean_return(),
                policy_loss: pending.mean(pending.policy_loss),
                value_loss: pending.mean(pending.value_loss),
                entropy: pending.mean(pending.entropy),
                si_attack: status.si_attack,
                asr_curr: status.asr_curr,
                ntp_curr: status.ntp_curr,
                event: status.events.join(";"),
            });
            pending = UpdateStats::default();
            last_logged = runner.t;
        }
    }
    Ok(TrainOutcome {
        agent,
        log,
        timesteps: runner.t,
        episodes: runner.episodes,
    })
}

struct Runner<'a> {
    env: &'a mut dyn Env,
    state: Vec<f64>,
    t: u64,
    act_rng: Rng,
    episode_rng: Rng,
    episode_return: f64,
    recent: VecDeque<f64>,
    window: usize,
    episodes: u64,
}

impl<'a> Runner<'a> {
    fn new(env: &'a mut dyn Env, seed: u64, window: usize) -> Self {
        let mut episode_rng = Rng::with_stream(seed, STREAM_EPISODES);
        let state = env.reset(rand::RngCore::next_u64(&mut episode_rng));
        Self {
            env,
            state,
            t: 0,
            act_rng: Rng::with_stream(seed, STREAM_ACT),
            episode_rng,
            episode_return: 0.0,
            recent: VecDeque::with_capacity(window),
            window,
            episodes: 0,
        }
    }

    fn mean_return(&self) -> Option<f64> {
        if self.recent.is_empty() {
            None
        } else {
            Some(self.recent.iter().sum::<f64>() / self.recent.len() as f64)
        }
    }

    fn collect(&mut self, agent: &Agent, hooks: &mut dyn ImplantHooks, n: usize) -> Result<RolloutBuffer> {
        let space = self.env.spec().action_space.clone();
        let mut buf = RolloutBuffer::with_capacity(n);
        for _ in 0..n {
            self.t += 1;
            let triggered = hooks.observe(self.t, &self.state);
            let trigger_active = triggered.is_some();
            let obs = triggered.unwrap_or_else(|| self.state.clone());
            let sampled = agent.policy.act(&obs, &mut self.act_rng)?;
            let (action, raw, log_prob, overridden) = match hooks.choose(&sampled.action, trigger_active) {
                Some(forced) => {
                    let raw = agent.policy.raw_from_action(&forced)?;
                    let log_prob = agent.policy.log_prob(&obs, &raw)?;
                    (forced, raw, log_prob, true)
                }
                None => (sampled.action, sampled.raw, sampled.log_prob, false),
            };
            let action = space.clip(action);
            let transition = self.env.step(&action)?;
            let reward = hooks.reward(transition.reward, trigger_active, &action);
            let value = agent.value.value(&obs)?;
            let bootstrap = if transition.truncated && !transition.done {
                Some(agent.value.value(&transition.next_state)?)
            } else {
                None
            };
            self.episode_return += transition.reward;
            hooks.after_step(self.t, &agent.policy, &transition)?;
            buf.push(Step {
                obs,
                action,
                raw,
                log_prob,
                value,
                reward,
                done: transition.done,
                truncated: transition.truncated,
                bootstrap,
                trigger_active,
                overridden,
            });
            if transition.ended() {
                if self.recent.len() == self.window {
                    self.recent.pop_front();
                }
                self.recent.push_back(self.episode_return);
                self.episode_return = 0.0;
                self.episodes += 1;
                self.state = self.env.reset(rand::RngCore::next_u64(&mut self.episode_rng));
            } else {
                self.state = transition.next_state;
            }
        }
        Ok(buf)
    }
}

struct Optimizers {
    policy: Adam,
    log_std: Adam,
    value: Adam,
    max_grad_norm: f64,
}

impl Optimizers {
    fn new(agent: &Agent, cfg: &TrainerConfig) -> Self {
        let adam = AdamConfig {
            eps: cfg.adam_eps,
            ..AdamConfig::default()
        };
        Self {
            policy: Adam::new(agent.policy.net().num_params(), adam),
            log_std: Adam::new(agent.policy.log_std().len(), adam),
            value: Adam::new(agent.value.net().num_params(), adam),
            max_grad_norm: cfg.max_grad_norm,
        }
    }

    fn apply(&mut self, agent: &mut Agent, mut grads: Gradients, lr: f64) -> Result<()> {
        clip_grad_norm(&mut [&mut grads.policy, &mut grads.log_std, &mut grads.value], self.max_grad_norm);
        self.policy.step(agent.policy.net_mut().params_mut(), &grads.policy, lr)?;
        self.log_std.step(agent.policy.log_std_mut(), &grads.log_std, lr)?;
        self.value.step(agent.value.net_mut().params_mut(), &grads.value, lr)?;
        Ok(())
    }
}

struct Gradients {
    policy: Vec<f64>,
    log_std: Vec<f64>,
    value: Vec<f64>,
}

impl Gradients {
    fn zeros(agent: &Agent) -> Self {
        Self {
            policy: vec![0.0; agent.policy.net().num_params()],
            log_std: vec![0.0; agent.policy.log_std().len()],
            value: vec![0.0; agent.value.net().num_params()],
        }
    }
}

/// Loss diagnostics summed over minibatches.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub batches: usize,
}

impl UpdateStats {
    fn merge(&mut self, other: &UpdateStats) {
        self.policy_loss += other.policy_loss;
        self.value_loss += other.value_loss;
        self.entropy += other.entropy;
        self.batches += other.batches;
    }

    fn mean(&self, total: f64) -> f64 {
        if self.batches == 0 {
            0.0
        } else {
            total / self.batches as f64
        }
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence(format!("{name} became {x}")))
    }
}

/// Policy-gradient and value-regression step over one minibatch. With
/// `clip = None` the surrogate is the plain `A * log pi` objective.
fn minibatch_step(
    agent: &mut Agent,
    opt: &mut Optimizers,
    buf: &RolloutBuffer,
    idx: &[usize],
    advantages: &[f64],
    cfg: &TrainerConfig,
    clip: Option<f64>,
    lr: f64,
) -> Result<UpdateStats> {
    let b = idx.len() as f64;
    let mut grads = Gradients::zeros(agent);
    let (mut pl, mut vl, mut ent) = (0.0, 0.0, 0.0);
    for (k, &i) in idx.iter().enumerate() {
        let step = &buf.steps()[i];
        let adv = advantages[k];
        let eval = agent.policy.evaluate(&step.obs, &step.raw)?;
        let c_logp = match clip {
            Some(eps) => {
                let ratio = (eval.log_prob - step.log_prob).exp();
                let (surr, dsurr) = clipped_surrogate(ratio, adv, eps);
                pl -= surr;
                -dsurr * ratio / b
            }
            None => {
                pl -= adv * eval.log_prob;
                -adv / b
            }
        };
        ent += eval.entropy;
        agent
            .policy
            .accumulate_grad(&eval, c_logp, -cfg.ent_coef / b, &mut grads.policy, &mut grads.log_std)?;
        let (v, tape) = agent.value.forward(&step.obs)?;
        let err = v - buf.returns()[i];
        vl += err * err;
        agent.value.accumulate_grad(&tape, cfg.vf_coef * 2.0 * err / b, &mut grads.value)?;
    }
    let stats = UpdateStats {
        policy_loss: pl / b,
        value_loss: vl / b,
        entropy: ent / b,
        batches: 1,
    };
    check_finite("policy loss", stats.policy_loss)?;
    check_finite("value loss", stats.value_loss)?;
    opt.apply(agent, grads, lr)?;
    Ok(stats)
}

fn normalized(adv: &[f64]) -> Vec<f64> {
    if adv.len() < 2 {
        return adv.to_vec();
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    // sample standard deviation, as in common PPO implementations
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
    adv.iter().map(|a| (a - mean) / (var.sqrt() + 1e-8)).collect()
}

fn ppo_update(
    agent: &mut Agent,
    opt: &mut Optimizers,
    buf: &RolloutBuffer,
    cfg: &TrainerConfig,
    lr: f64,
    rng: &mut Rng,
) -> Result<UpdateStats> {
    let mut total = UpdateStats::default();
    let mut order: Vec<usize> = (0..buf.len()).collect();
    for _ in 0..cfg.n_epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let raw: Vec<f64> = chunk.iter().map(|&i| buf.advantages()[i]).collect();
            let adv = if cfg.normalize_advantage { normalized(&raw) } else { raw };
            let stats = minibatch_step(agent, opt, buf, chunk, &adv, cfg, Some(cfg.clip_range), lr)?;
            total.merge(&stats);
        }
    }
    Ok(total)
}

fn a2c_update(agent: &mut Agent, opt: &mut Optimizers, buf: &RolloutBuffer, cfg: &TrainerConfig, lr: f64) -> Result<UpdateStats> {
    let idx: Vec<usize> = (0..buf.len()).collect();
    let raw = buf.advantages().to_vec();
    let adv = if cfg.normalize_advantage { normalized(&raw) } else { raw };
    minibatch_step(agent, opt, buf, &idx, &adv, cfg, None, lr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Mode of the categorical / squashed Gaussian mean.
    Deterministic,
    Stochastic,
}

/// Runs one episode from `env.reset(seed)` and returns its undiscounted return.
pub fn run_episode(env: &mut dyn Env, policy: &Policy, seed: u64, mode: ActionMode, rng: &mut Rng) -> Result<f64> {
    let space = env.spec().action_space.clone();
    let mut state = env.reset(seed);
    let mut total = 0.0;
    loop {
        let action: Action = match mode {
            ActionMode::Deterministic => policy.deterministic_action(&state)?,
            ActionMode::Stochastic => policy.act(&state, rng)?.action,
        };
        let tr = env.step(&space.clip(action))?;
        total += tr.reward;
        if tr.ended() {
            return Ok(total);
        }
        state = tr.next_state;
    }
}

/// Returns of `n` episodes whose reset seeds are drawn from `rng`.
pub fn evaluate_returns(env: &mut dyn Env, policy: &Policy, n: usize, mode: ActionMode, rng: &mut Rng) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| {
            let seed = rand::RngCore::next_u64(rng);
            run_episode(env, policy, seed, mode, rng)
        })
        .collect()
}
