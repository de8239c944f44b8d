use serde::{Deserialize, Serialize};

use crate::agent::Policy;
use crate::envs::Action;
use crate::error::{Error, Result};
use crate::evalkit::MagnitudeStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSchedule {
    Constant,
    /// `eta_k = eta_0 (1 + cos(pi k / N)) / 2`.
    Cosine,
}

/// Trigger magnitude settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagnitudeConfig {
    pub strategy: MagnitudeStrategy,
    pub n_opt: usize,
    /// Step size as a fraction of the dimension's range width.
    pub lr_scale: f64,
    pub schedule: StepSchedule,
    pub momentum: f64,
    pub eps_log: f64,
    /// Return the lowest-loss iterate instead of the last one.
    pub return_best: bool,
    /// Number of optimizations spread evenly over the implant phase.
    pub reopt_times: usize,
}

impl Default for MagnitudeConfig {
    fn default() -> Self {
        Self {
            strategy: MagnitudeStrategy::Optimized,
            n_opt: 200,
            lr_scale: 0.05,
            schedule: StepSchedule::Constant,
            momentum: 0.9,
            eps_log: 1e-8,
            return_best: true,
            reopt_times: 1,
        }
    }
}

impl MagnitudeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_opt == 0 {
            return Err(Error::config("magnitude.n_opt", "must be at least 1"));
        }
        if !(self.lr_scale > 0.0 && self.lr_scale.is_finite()) {
            return Err(Error::config("magnitude.lr_scale", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("magnitude.momentum", "must lie in [0, 1)"));
        }
        if !(self.eps_log > 0.0) {
            return Err(Error::config("magnitude.eps_log", "must be positive"));
        }
        if self.reopt_times == 0 {
            return Err(Error::config("magnitude.reopt_times", "must be at least 1"));
        }
        Ok(())
    }

    fn step_size(&self, k: usize, width: f64) -> f64 {
        let eta0 = self.lr_scale * width;
        match self.schedule {
            StepSchedule::Constant => eta0,
            StepSchedule::Cosine => eta0 * 0.5 * (1.0 + (std::f64::consts::PI * k as f64 / self.n_opt as f64).cos()),
        }
    }
}

/// Attack loss of a state: `-ln(pi(a_target | s) + eps)` for discrete
/// targets, `||mu(s) - a_target||^2` for continuous ones.
pub fn trigger_loss(policy: &Policy, state: &[f64], target: &Action, eps_log: f64) -> Result<f64> {
    match target {
        Action::Discrete(a) => Ok(-(policy.action_prob(state, *a)? + eps_log).ln()),
        Action::Continuous(t) => {
            let mean = policy.action_mean(state)?;
            if mean.len() != t.len() {
                return Err(Error::Shape(format!("target has {} dims, policy {}", t.len(), mean.len())));
            }
            Ok(mean.iter().zip(t).map(|(m, t)| (m - t) * (m - t)).sum())
        }
    }
}

/// Loss and its gradient with respect to the whole state.
pub fn trigger_loss_grad(policy: &Policy, state: &[f64], target: &Action, eps_log: f64) -> Result<(f64, Vec<f64>)> {
    match target {
        Action::Discrete(a) => {
            let (p, dp) = policy.action_prob_with_grad(state, *a)?;
            let scale = -1.0 / (p + eps_log);
            Ok((-(p + eps_log).ln(), dp.iter().map(|g| scale * g).collect()))
        }
        Action::Continuous(t) => {
            let mean = policy.action_mean(state)?;
            if mean.len() != t.len() {
                return Err(Error::Shape(format!("target has {} dims, policy {}", t.len(), mean.len())));
            }
            let w: Vec<f64> = mean.iter().zip(t).map(|(m, t)| 2.0 * (m - t)).collect();
            let loss = mean.iter().zip(t).map(|(m, t)| (m - t) * (m - t)).sum();
            let (_, grad) = policy.action_mean_vjp(state, &w)?;
            Ok((loss, grad))
        }
    }
}

/// Loss and `dL/dv` with `base[dim]` replaced by `v`.
pub fn trigger_value_grad(policy: &Policy, base: &[f64], dim: usize, v: f64, target: &Action, eps_log: f64) -> Result<(f64, f64)> {
    let mut s = base.to_vec();
    s[dim] = v;
    let (loss, grad) = trigger_loss_grad(policy, &s, target, eps_log)?;
    Ok((loss, grad[dim]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeTrace {
    /// Returned magnitude.
    pub value: f64,
    /// Loss at `value`.
    pub loss: f64,
    /// Iterates `v_0 ..= v_N` and their losses.
    pub values: Vec<f64>,
    pub losses: Vec<f64>,
}

impl MagnitudeTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }
}

/// Momentum gradient descent on one trigger coordinate, projected onto
/// `[lo, hi]` after every step, starting from the midpoint.
pub fn optimize_magnitude(
    policy: &Policy,
    base: &[f64],
    dim: usize,
    range: (f64, f64),
    target: &Action,
    cfg: &MagnitudeConfig,
) -> Result<MagnitudeTrace> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::DegenerateRange { dim, min: lo, max: hi });
    }
    if dim >= base.len() {
        return Err(Error::Shape(format!("dimension {dim} out of range for a {}-dim state", base.len())));
    }
    let width = hi - lo;
    let mut v = 0.5 * (lo + hi);
    let mut u = 0.0;
    let mut values = Vec::with_capacity(cfg.n_opt + 1);
    let mut losses = Vec::with_capacity(cfg.n_opt + 1);
    for k in 0..cfg.n_opt {
        let (loss, g) = trigger_value_grad(policy, base, dim, v, target, cfg.eps_log)?;
        values.push(v);
        losses.push(loss);
        u = cfg.momentum * u - cfg.step_size(k, width) * g;
        v = (v + u).clamp(lo, hi);
    }
    let mut s = base.to_vec();
    s[dim] = v;
    values.push(v);
    losses.push(trigger_loss(policy, &s, target, cfg.eps_log)?);

    let pick = if cfg.return_best {
        // first minimum
        let mut best = 0;
        for (i, l) in losses.iter().enumerate() {
            if *l < losses[best] {
                best = i;
            }
        }
        best
    } else {
        losses.len() - 1
    };
    Ok(MagnitudeTrace {
        value: values[pick],
        loss: losses[pick],
        values,
        losses,
    })
}

/// Optimizes several trigger coordinates one after another in the given
/// order; each search sees the values already fixed by earlier ones.
pub fn optimize_trigger(
    policy: &Policy,
    base: &[f64],
    dims: &[usize],
    ranges: &[(f64, f64)],
    target: &Action,
    cfg: &MagnitudeConfig,
) -> Result<Vec<MagnitudeTrace>> {
    if dims.len() != ranges.len() {
        return Err(Error::Shape(format!("{} dimensions but {} ranges", dims.len(), ranges.len())));
    }
    let mut state = base.to_vec();
    let mut traces = Vec::with_capacity(dims.len());
    for (&j, &range) in dims.iter().zip(ranges) {
        let trace = optimize_magnitude(policy, &state, j, range, target, cfg)?;
        state[j] = trace.value;
        traces.push(trace);
    }
    Ok(traces)
}

/// Timesteps at which the trigger magnitudes are (re)optimized: the first at
/// `start`, the rest evenly spaced over `[start, end)`.
pub fn reoptimization_points(start: u64, end: u64, n_times: usize) -> Vec<u64> {
    let n = n_times.max(1) as u64;
    let span = end.saturating_sub(start);
    let mut points: Vec<u64> = (0..n).map(|i| start + span * i / n).collect();
    points.dedup();
    points
}
