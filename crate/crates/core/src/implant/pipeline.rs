use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::schedule::{poisoned_reward_value, AttackSchedule, ImplantConfig};
use crate::agent::{
    evaluate_returns, train, Agent, Algorithm, HookStatus, ImplantHooks, NoHooks, Policy, TrainerConfig, TrainingLog,
};
use crate::dimension::{background_mean, explain_policy, Attribution, DimensionConfig, ExplainTarget};
use crate::envs::{self, Action, Env, EnvSpec, Transition};
use crate::error::{Error, Result, Stage, StageExt};
use crate::evalkit::{eval_asr, eval_ntp, heuristic_magnitude, AsrConfig, DeterministicActor, MagnitudeStrategy};
use crate::magnitude::{optimize_trigger, reoptimization_points, MagnitudeConfig, TriggerSpec};
use crate::numerics::{mean, Rng};
use crate::timing::{Decision, FreezeMonitor, TimingConfig, WindowTest};

const STREAM_HOOKS: u64 = 20;
const STREAM_TRIGGER: u64 = 21;

/// Settings of the attack stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub timing: TimingConfig,
    pub dimension: DimensionConfig,
    pub magnitude: MagnitudeConfig,
    pub implant: ImplantConfig,
}

impl AttackConfig {
    pub fn validate_for(&self, spec: &EnvSpec) -> Result<()> {
        self.timing.validate()?;
        self.dimension.validate_for(spec.state_dim)?;
        self.magnitude.validate()?;
        self.implant.validate_for(&spec.action_space)
    }
}

/// Builds a trigger for `policy` from clean `states`: dimension selection
/// (SHAP-based or fixed) followed by magnitude choice (gradient search or
/// heuristic). `base` is the state the magnitude search starts from.
pub fn build_trigger(
    policy: &Policy,
    spec: &EnvSpec,
    states: &[Vec<f64>],
    target: &Action,
    dim_cfg: &DimensionConfig,
    mag_cfg: &MagnitudeConfig,
    rng: &mut Rng,
) -> Result<(TriggerSpec, Option<Attribution>)> {
    if states.is_empty() {
        return Err(Error::Estimation("no clean states collected before trigger construction".into())).stage(Stage::Dimension);
    }
    let d = spec.state_dim;
    let attribution = if dim_cfg.strategy.uses_shap() {
        let background: Vec<Vec<f64>> = states.iter().rev().take(dim_cfg.n_background).cloned().collect();
        let mut idx: Vec<usize> = (0..background.len()).collect();
        rng.shuffle(&mut idx);
        let explain: Vec<Vec<f64>> = idx.iter().take(dim_cfg.n_explain).map(|&i| background[i].clone()).collect();
        let what = ExplainTarget::for_policy(policy, target, &explain).stage(Stage::Dimension)?;
        Some(explain_policy(policy, what, &explain, &background, &dim_cfg.kernel(), rng).stage(Stage::Dimension)?)
    } else {
        None
    };
    let dims = dim_cfg.strategy.select(dim_cfg.k, d, attribution.as_ref(), rng).stage(Stage::Dimension)?;
    let ranges: Vec<(f64, f64)> = dims.iter().map(|&j| spec.state_bounds[j]).collect();
    let base = background_mean(states).stage(Stage::Magnitude)?;

    let (magnitudes, initial_loss, final_loss) = match mag_cfg.strategy {
        MagnitudeStrategy::Optimized => {
            let traces = optimize_trigger(policy, &base, &dims, &ranges, target, mag_cfg).stage(Stage::Magnitude)?;
            let initial = traces.first().map(|t| t.initial_loss());
            let last = traces.last().map(|t| t.loss);
            (traces.into_iter().map(|t| t.value).collect(), initial, last)
        }
        strategy => {
            let values = dims
                .iter()
                .zip(&ranges)
                .map(|(&j, &range)| {
                    let observed: Vec<f64> = states.iter().map(|s| s[j]).collect();
                    heuristic_magnitude(strategy, &observed, range, rng)
                })
                .collect::<Result<Vec<f64>>>()
                .stage(Stage::Magnitude)?;
            (values, None, None)
        }
    };
    let mut trigger = TriggerSpec::new(dims, magnitudes, target.clone(), ranges).stage(Stage::Magnitude)?;
    trigger.dimension_strategy = dim_cfg.strategy.to_string();
    trigger.magnitude_strategy = mag_cfg.strategy.name().to_string();
    trigger.importance = attribution.as_ref().map(|a| a.importance.clone());
    trigger.initial_loss = initial_loss;
    trigger.final_loss = final_loss;
    Ok((trigger, attribution))
}

enum Phase {
    Frozen,
    Implanting { schedule: AttackSchedule, trigger: TriggerSpec },
}

/// Training hooks running the whole attack: trigger-free training under a
/// freeze monitor, trigger construction at unfreeze, then poisoning with
/// periodic interval adaptation and optional magnitude re-optimization.
pub struct BackdoorHooks {
    cfg: AttackConfig,
    spec: EnvSpec,
    total_steps: u64,
    eval_env: Box<dyn Env>,
    rng: Rng,
    monitor: FreezeMonitor,
    states: VecDeque<Vec<f64>>,
    reward_max: f64,
    reward_min: f64,
    phase: Phase,
    active: bool,
    target: Action,
    eps_action: f64,
    reopt_at: Vec<u64>,
    unfreeze_step: Option<u64>,
    attribution: Option<Attribution>,
    history: Vec<TriggerSpec>,
    events: Vec<String>,
    progress: bool,
}

impl BackdoorHooks {
    pub fn new(spec: &EnvSpec, cfg: &AttackConfig, total_steps: u64, seed: u64, progress: bool) -> Result<Self> {
        cfg.validate_for(spec)?;
        Ok(Self {
            cfg: cfg.clone(),
            spec: spec.clone(),
            total_steps,
            eval_env: envs::make(spec.name)?,
            rng: Rng::with_stream(seed, STREAM_HOOKS),
            monitor: cfg.timing.monitor(total_steps),
            states: VecDeque::with_capacity(cfg.dimension.n_background),
            reward_max: f64::NEG_INFINITY,
            reward_min: f64::INFINITY,
            phase: Phase::Frozen,
            active: false,
            target: cfg.implant.target_for(&spec.action_space),
            eps_action: cfg.implant.eps_action_for(&spec.action_space),
            reopt_at: Vec::new(),
            unfreeze_step: None,
            attribution: None,
            history: Vec::new(),
            events: Vec::new(),
            progress,
        })
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self.phase, Phase::Frozen)
    }

    pub fn monitor(&self) -> &FreezeMonitor {
        &self.monitor
    }

    pub fn schedule(&self) -> Option<&AttackSchedule> {
        match &self.phase {
            Phase::Implanting { schedule, .. } => Some(schedule),
            Phase::Frozen => None,
        }
    }

    pub fn trigger(&self) -> Option<&TriggerSpec> {
        match &self.phase {
            Phase::Implanting { trigger, .. } => Some(trigger),
            Phase::Frozen => None,
        }
    }

    pub fn clean_states(&self) -> Vec<Vec<f64>> {
        self.states.iter().cloned().collect()
    }

    fn say(&mut self, stage: Stage, msg: String) {
        if self.progress {
            println!("[{stage}] {msg}");
        }
        self.events.push(msg);
    }

    fn next_seed(&mut self) -> u64 {
        rand::RngCore::next_u64(&mut self.rng)
    }

    fn freeze_score(&mut self, policy: &Policy) -> Result<f64> {
        let stream = self.next_seed();
        let mut eval_rng = self.rng.fork(stream);
        let returns = evaluate_returns(
            self.eval_env.as_mut(),
            policy,
            self.cfg.timing.eval_episodes,
            self.cfg.timing.eval_mode.into(),
            &mut eval_rng,
        )?;
        Ok(mean(&returns))
    }

    fn construct_trigger(&mut self, policy: &Policy, t: u64) -> Result<TriggerSpec> {
        let states = self.clean_states();
        let mut trigger_rng = self.rng.fork(STREAM_TRIGGER + t);
        let (mut trigger, attribution) = build_trigger(
            policy,
            &self.spec,
            &states,
            &self.target,
            &self.cfg.dimension,
            &self.cfg.magnitude,
            &mut trigger_rng,
        )?;
        trigger.timestep = t;
        if attribution.is_some() {
            self.attribution = attribution;
        }
        Ok(trigger)
    }

    fn unfreeze(&mut self, t: u64, policy: &Policy) -> Result<()> {
        self.unfreeze_step = Some(t);
        let p = self.monitor.p_trail().last().map(|w| w.p_value);
        let msg = match p {
            Some(p) => format!("unfreeze t={t} p={p:.6}"),
            None => format!("unfreeze t={t}"),
        };
        self.say(Stage::Freeze, msg);
        let trigger = self.construct_trigger(policy, t)?;
        let r_h = poisoned_reward_value(self.reward_max, self.reward_min);
        self.say(
            Stage::Magnitude,
            format!("trigger dims={:?} values={:?} r_h={r_h}", trigger.dimensions, trigger.magnitudes),
        );
        self.history.push(trigger.clone());
        self.reopt_at = reoptimization_points(t, self.total_steps, self.cfg.magnitude.reopt_times);
        let schedule = AttackSchedule::new(&self.cfg.implant, self.target.clone(), r_h, self.eps_action);
        self.phase = Phase::Implanting { schedule, trigger };
        Ok(())
    }

    fn reoptimize(&mut self, t: u64, policy: &Policy) -> Result<()> {
        let Phase::Implanting { trigger, .. } = &self.phase else {
            return Ok(());
        };
        if self.cfg.magnitude.strategy != MagnitudeStrategy::Optimized {
            return Ok(());
        }
        let dims = trigger.dimensions.clone();
        let ranges = trigger.ranges.clone();
        let base = background_mean(&self.clean_states()).stage(Stage::Magnitude)?;
        let traces = optimize_trigger(policy, &base, &dims, &ranges, &self.target, &self.cfg.magnitude).stage(Stage::Magnitude)?;
        let Phase::Implanting { trigger, .. } = &mut self.phase else {
            unreachable!()
        };
        trigger.magnitudes = traces.iter().map(|tr| tr.value).collect();
        trigger.initial_loss = traces.first().map(|tr| tr.initial_loss());
        trigger.final_loss = traces.last().map(|tr| tr.loss);
        trigger.timestep = t;
        let snapshot = trigger.clone();
        self.history.push(snapshot.clone());
        self.say(Stage::Magnitude, format!("reoptimize t={t} values={:?}", snapshot.magnitudes));
        Ok(())
    }

    fn adapt(&mut self, policy: &Policy) -> Result<()> {
        let n = self.cfg.implant.adapt_episodes;
        let (p_l, p_u) = self.spec.reference_returns;
        let ntp_seed = self.next_seed();
        let asr_seed = self.next_seed();
        let eps = self.eps_action;
        let Phase::Implanting { schedule, trigger } = &mut self.phase else {
            return Ok(());
        };
        let mut actor = DeterministicActor(policy);
        let (ntp, _) = eval_ntp(self.eval_env.as_mut(), &mut actor, n, p_u, p_l, ntp_seed)?;
        let asr_cfg = AsrConfig {
            n_activations: 10 * n,
            n_episodes: n,
            ..AsrConfig::default()
        };
        let asr = eval_asr(self.eval_env.as_mut(), &mut actor, trigger, eps, &asr_cfg, asr_seed)?.asr;
        if self.cfg.implant.adapt {
            schedule.adapt_frequency(asr, ntp);
        } else {
            schedule.asr_curr = Some(asr);
            schedule.ntp_curr = Some(ntp);
        }
        Ok(())
    }

    fn step_frozen(&mut self, t: u64, policy: &Policy, tr: &Transition) -> Result<()> {
        self.reward_max = self.reward_max.max(tr.reward);
        self.reward_min = self.reward_min.min(tr.reward);
        let mut decision = self.monitor.check_step(t);
        if decision == Decision::StayFrozen && self.monitor.needs_evaluations() && t % self.monitor.eval_interval() == 0 {
            let score = self.freeze_score(policy)?;
            decision = self.monitor.record_eval(t, score);
        }
        if decision == Decision::Unfreeze {
            self.unfreeze(t, policy)?;
        }
        Ok(())
    }

    fn step_implanting(&mut self, t: u64, policy: &Policy) -> Result<()> {
        if self.reopt_at.iter().skip(1).any(|&p| p == t) {
            self.reoptimize(t, policy)?;
        }
        let since = t - self.unfreeze_step.unwrap_or(0);
        if since > 0 && since % self.cfg.timing.eval_interval == 0 {
            self.adapt(policy).stage(Stage::Implant)?;
        }
        Ok(())
    }

    /// Builds a trigger from the final policy when the run ended frozen.
    fn finish(&mut self, t: u64, policy: &Policy) -> Result<()> {
        if self.is_frozen() {
            self.say(Stage::Freeze, format!("still frozen at t={t}; trigger built from the final policy"));
            let trigger = self.construct_trigger(policy, t)?;
            self.history.push(trigger.clone());
            let r_h = poisoned_reward_value(self.reward_max, self.reward_min);
            let schedule = AttackSchedule::new(&self.cfg.implant, self.target.clone(), r_h, self.eps_action);
            self.phase = Phase::Implanting { schedule, trigger };
        }
        Ok(())
    }
}

impl ImplantHooks for BackdoorHooks {
    fn observe(&mut self, _t: u64, state: &[f64]) -> Option<Vec<f64>> {
        self.active = false;
        if let Phase::Implanting { schedule, trigger } = &mut self.phase {
            if schedule.tick() {
                self.active = true;
                return Some(trigger.inject(state));
            }
        }
        None
    }

    fn choose(&mut self, proposed: &Action, trigger_active: bool) -> Option<Action> {
        match &mut self.phase {
            Phase::Implanting { schedule, .. } if trigger_active => {
                let (action, overridden) = schedule.manipulate_action(proposed, true);
                overridden.then_some(action)
            }
            _ => None,
        }
    }

    fn reward(&mut self, reward: f64, trigger_active: bool, action: &Action) -> f64 {
        match &mut self.phase {
            Phase::Implanting { schedule, .. } => schedule.modify_reward(reward, trigger_active, action),
            Phase::Frozen => reward,
        }
    }

    fn after_step(&mut self, t: u64, policy: &Policy, transition: &Transition) -> Result<()> {
        if self.states.len() == self.cfg.dimension.n_background {
            self.states.pop_front();
        }
        self.states.push_back(transition.state.clone());
        match self.phase {
            Phase::Frozen => self.step_frozen(t, policy, transition).stage(Stage::Freeze),
            Phase::Implanting { .. } => self.step_implanting(t, policy),
        }
    }

    fn drain_status(&mut self) -> HookStatus {
        let (si, asr, ntp) = match &self.phase {
            Phase::Implanting { schedule, .. } => (Some(schedule.si_attack), schedule.asr_curr, schedule.ntp_curr),
            Phase::Frozen => (None, None, None),
        };
        HookStatus {
            si_attack: si,
            asr_curr: asr,
            ntp_curr: ntp,
            events: std::mem::take(&mut self.events),
        }
    }
}

/// Everything a poisoned training run produced.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub agent: Agent,
    /// Final trigger; `None` when the attack was disabled.
    pub trigger: Option<TriggerSpec>,
    /// Every trigger in effect during the run, in order.
    pub trigger_history: Vec<TriggerSpec>,
    pub attribution: Option<Attribution>,
    pub log: TrainingLog,
    pub unfreeze_step: Option<u64>,
    pub freeze_scores: Vec<f64>,
    pub p_trail: Vec<WindowTest>,
    pub schedule: Option<AttackSchedule>,
    /// Clean states seen most recently, for heuristic baselines.
    pub clean_states: Vec<Vec<f64>>,
}

/// Trains an agent on `env_name` with the full attack pipeline.
pub fn run_attack(
    env_name: &str,
    algo: Algorithm,
    trainer: &TrainerConfig,
    attack: &AttackConfig,
    seed: u64,
    progress: bool,
) -> Result<AttackOutcome> {
    let mut env = envs::make(env_name)?;
    let spec = env.spec().clone();
    trainer.validate()?;
    attack.validate_for(&spec)?;
    let agent = Agent::seeded(&spec, trainer, seed)?;
    if !attack.implant.enabled {
        let out = train(algo, env.as_mut(), agent, &mut NoHooks, trainer, seed)?;
        return Ok(AttackOutcome {
            agent: out.agent,
            trigger: None,
            trigger_history: Vec::new(),
            attribution: None,
            log: out.log,
            unfreeze_step: None,
            freeze_scores: Vec::new(),
            p_trail: Vec::new(),
            schedule: None,
            clean_states: Vec::new(),
        });
    }
    let mut hooks = BackdoorHooks::new(&spec, attack, trainer.total_timesteps, seed, progress)?;
    let out = train(algo, env.as_mut(), agent, &mut hooks, trainer, seed).map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => e.at(Stage::Implant),
    })?;
    hooks.finish(out.timesteps, &out.agent.policy)?;
    let mut log = out.log;
    let leftover = hooks.drain_status();
    if let Some(last) = log.rows.last_mut() {
        for e in leftover.events {
            if !last.event.is_empty() {
                last.event.push(';');
            }
            last.event.push_str(&e);
        }
    }
    if progress {
        if let Some(s) = hooks.schedule() {
            println!(
                "[implant] done: SI={:.2} activations={} overrides={} poisoned rewards={}",
                s.si_attack, s.activations, s.overrides, s.poisoned_rewards
            );
        }
    }
    Ok(AttackOutcome {
        agent: out.agent,
        trigger: hooks.trigger().cloned(),
        trigger_history: hooks.history.clone(),
        attribution: hooks.attribution.clone(),
        log,
        unfreeze_step: hooks.unfreeze_step,
        freeze_scores: hooks.monitor.history().to_vec(),
        p_trail: hooks.monitor.p_trail().to_vec(),
        schedule: hooks.schedule().cloned(),
        clean_states: hooks.clean_states(),
    })
}
