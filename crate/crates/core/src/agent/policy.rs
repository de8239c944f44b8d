use serde::{Deserialize, Serialize};

use crate::envs::{Action, ActionSpace};
use crate::error::{Error, Result};
use crate::numerics::{Mlp, Rng, Tape};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How a Gaussian policy's unbounded sample is mapped into the action box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Squash {
    /// `a = center + half_width * tanh(u)`, log-density corrected.
    Tanh,
    /// `a = clip(u, low, high)`; log-density of `u`.
    Clip,
    /// `a = u`, no box enforcement.
    Identity,
}

/// The pre-squash sample a log-probability refers to.
#[derive(Debug, Clone, PartialEq)]
pub enum RawAction {
    Index(usize),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    pub action: Action,
    pub raw: RawAction,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyHead {
    /// Softmax over logits.
    Categorical { n: usize },
    /// Diagonal Gaussian around the network output with state-independent
    /// log standard deviations.
    Gaussian {
        log_std: Vec<f64>,
        low: Vec<f64>,
        high: Vec<f64>,
        squash: Squash,
    },
}

/// Stochastic policy `pi_theta(a | s)` over a tanh MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    net: Mlp,
    head: PolicyHead,
}

/// Per-sample quantities needed by policy-gradient updates.
#[derive(Debug, Clone)]
pub struct PolicyEval {
    pub tape: Tape,
    pub log_prob: f64,
    pub entropy: f64,
    /// d log_prob / d network output
    pub dlogp_dout: Vec<f64>,
    /// d entropy / d network output
    pub dent_dout: Vec<f64>,
    /// d log_prob / d log_std (empty for categorical heads)
    pub dlogp_dlogstd: Vec<f64>,
    /// d entropy / d log_std
    pub dent_dlogstd: Vec<f64>,
}

impl Policy {
    /// Fresh policy with tanh hidden layers of the given widths. The output
    /// layer is initialised small so the initial policy is near-uniform.
    pub fn new(state_dim: usize, space: &ActionSpace, hidden: &[usize], squash: Squash, rng: &mut Rng) -> Result<Self> {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(space.dim());
        let net = Mlp::new(&sizes, 0.01, rng)?;
        Self::from_net(net, space, squash)
    }

    pub fn from_net(net: Mlp, space: &ActionSpace, squash: Squash) -> Result<Self> {
        if net.output_dim() != space.dim() {
            return Err(Error::Shape(format!(
                "policy network emits {} values for an action space of dimension {}",
                net.output_dim(),
                space.dim()
            )));
        }
        let head = match space {
            ActionSpace::Discrete { n } => PolicyHead::Categorical { n: *n },
            ActionSpace::Continuous { low, high } => PolicyHead::Gaussian {
                log_std: vec![0.0; low.len()],
                low: low.clone(),
                high: high.clone(),
                squash,
            },
        };
        Ok(Self { net, head })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn head(&self) -> &PolicyHead {
        &self.head
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.head, PolicyHead::Categorical { .. })
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Log-std parameters; empty for categorical heads.
    pub fn log_std(&self) -> &[f64] {
        match &self.head {
            PolicyHead::Gaussian { log_std, .. } => log_std,
            PolicyHead::Categorical { .. } => &[],
        }
    }

    pub fn log_std_mut(&mut self) -> &mut [f64] {
        match &mut self.head {
            PolicyHead::Gaussian { log_std, .. } => log_std,
            PolicyHead::Categorical { .. } => &mut [],
        }
    }

    fn outputs(&self, state: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let (out, tape) = self.net.forward(state)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::PolicyCorruption(format!("network output {out:?}")));
        }
        Ok((out, tape))
    }

    /// Action probabilities of a categorical policy.
    pub fn probabilities(&self, state: &[f64]) -> Result<Vec<f64>> {
        match self.head {
            PolicyHead::Categorical { .. } => Ok(softmax(&self.outputs(state)?.0)),
            PolicyHead::Gaussian { .. } => Err(Error::Domain("probabilities are only defined for discrete policies".into())),
        }
    }

    /// `pi_theta(action | state)` for a discrete policy.
    pub fn action_prob(&self, state: &[f64], action: usize) -> Result<f64> {
        let probs = self.probabilities(state)?;
        probs
            .get(action)
            .copied()
            .ok_or_else(|| Error::Domain(format!("action {action} out of range for {} actions", probs.len())))
    }

    /// `pi(action | state)` and its gradient with respect to the state.
    pub fn action_prob_with_grad(&self, state: &[f64], action: usize) -> Result<(f64, Vec<f64>)> {
        if !self.is_discrete() {
            return Err(Error::Domain("action_prob requires a discrete policy".into()));
        }
        let (logits, tape) = self.outputs(state)?;
        let probs = softmax(&logits);
        let p = *probs
            .get(action)
            .ok_or_else(|| Error::Domain(format!("action {action} out of range")))?;
        let dout: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, &pi)| p * (if i == action { 1.0 } else { 0.0 } - pi))
            .collect();
        let (_, ds) = self.net.backward(&tape, &dout)?;
        Ok((p, ds))
    }

    /// Deterministic action in action space: the squashed mean for a
    /// Gaussian head.
    pub fn action_mean(&self, state: &[f64]) -> Result<Vec<f64>> {
        match &self.head {
            PolicyHead::Gaussian { low, high, squash, .. } => {
                let (mu, _) = self.outputs(state)?;
                Ok(mu.iter().enumerate().map(|(i, &m)| squash_value(*squash, m, low[i], high[i]).0).collect())
            }
            PolicyHead::Categorical { .. } => Err(Error::Domain("action_mean requires a continuous policy".into())),
        }
    }

    /// Deterministic mean action and the state gradient of `<weights, mean>`.
    pub fn action_mean_vjp(&self, state: &[f64], weights: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let PolicyHead::Gaussian { low, high, squash, .. } = &self.head else {
            return Err(Error::Domain("action_mean requires a continuous policy".into()));
        };
        if weights.len() != low.len() {
            return Err(Error::Shape(format!("{} weights for {} action dims", weights.len(), low.len())));
        }
        let (mu, tape) = self.outputs(state)?;
        let mut mean = Vec::with_capacity(mu.len());
        let mut dout = Vec::with_capacity(mu.len());
        for (i, &m) in mu.iter().enumerate() {
            let (a, da) = squash_value(*squash, m, low[i], high[i]);
            mean.push(a);
            dout.push(weights[i] * da);
        }
        let (_, ds) = self.net.backward(&tape, &dout)?;
        Ok((mean, ds))
    }

    /// Mode (discrete) or squashed mean (continuous).
    pub fn deterministic_action(&self, state: &[f64]) -> Result<Action> {
        match &self.head {
            PolicyHead::Categorical { .. } => {
                let (logits, _) = self.outputs(state)?;
                Ok(Action::Discrete(argmax(&logits)))
            }
            PolicyHead::Gaussian { .. } => Ok(Action::Continuous(self.action_mean(state)?)),
        }
    }

    pub fn act(&self, state: &[f64], rng: &mut Rng) -> Result<SampledAction> {
        let (out, _) = self.outputs(state)?;
        match &self.head {
            PolicyHead::Categorical { .. } => {
                let probs = softmax(&out);
                let a = rng.categorical(&probs);
                Ok(SampledAction {
                    action: Action::Discrete(a),
                    raw: RawAction::Index(a),
                    log_prob: log_softmax(&out)[a],
                })
            }
            PolicyHead::Gaussian { log_std, low, high, squash } => {
                let u: Vec<f64> = out.iter().zip(log_std).map(|(m, ls)| m + ls.exp() * rng.normal()).collect();
                let action = u.iter().enumerate().map(|(i, &x)| squash_value(*squash, x, low[i], high[i]).0).collect();
                let log_prob = gaussian_log_prob(&out, log_std, &u) - squash_log_det(*squash, &u, low, high);
                Ok(SampledAction {
                    action: Action::Continuous(action),
                    raw: RawAction::Vector(u),
                    log_prob,
                })
            }
        }
    }

    /// Pre-squash representation of an environment action. Tanh-squashed
    /// boundary actions are pulled inside by `1e-3` of the half-width so the
    /// pre-image stays finite.
    pub fn raw_from_action(&self, action: &Action) -> Result<RawAction> {
        match (&self.head, action) {
            (PolicyHead::Categorical { n }, Action::Discrete(a)) if a < n => Ok(RawAction::Index(*a)),
            (PolicyHead::Gaussian { low, high, squash, .. }, Action::Continuous(a)) if a.len() == low.len() => {
                let u = a
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| match squash {
                        Squash::Tanh => {
                            let c = 0.5 * (high[i] + low[i]);
                            let h = 0.5 * (high[i] - low[i]);
                            (((x - c) / h).clamp(-1.0 + 1e-3, 1.0 - 1e-3)).atanh()
                        }
                        Squash::Clip | Squash::Identity => x,
                    })
                    .collect();
                Ok(RawAction::Vector(u))
            }
            _ => Err(Error::Domain(format!("action {action:?} does not fit this policy"))),
        }
    }

    pub fn log_prob(&self, state: &[f64], raw: &RawAction) -> Result<f64> {
        Ok(self.evaluate(state, raw)?.log_prob)
    }

    /// Forward pass plus log-probability / entropy and their output gradients.
    pub fn evaluate(&self, state: &[f64], raw: &RawAction) -> Result<PolicyEval> {
        let (out, tape) = self.outputs(state)?;
        match (&self.head, raw) {
            (PolicyHead::Categorical { n }, RawAction::Index(a)) if a < n => {
                let logp = log_softmax(&out);
                let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
                let entropy = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
                let dlogp_dout = probs.iter().enumerate().map(|(i, p)| if i == *a { 1.0 } else { 0.0 } - p).collect();
                // dH/dz_i = -p_i (log p_i + H)
                let dent_dout = probs.iter().zip(&logp).map(|(p, l)| -p * (l + entropy)).collect();
                Ok(PolicyEval {
                    tape,
                    log_prob: logp[*a],
                    entropy,
                    dlogp_dout,
                    dent_dout,
                    dlogp_dlogstd: Vec::new(),
                    dent_dlogstd: Vec::new(),
                })
            }
            (PolicyHead::Gaussian { log_std, low, high, squash }, RawAction::Vector(u)) if u.len() == out.len() => {
                let log_prob = gaussian_log_prob(&out, log_std, u) - squash_log_det(*squash, u, low, high);
                let entropy = log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum();
                let mut dlogp_dout = Vec::with_capacity(u.len());
                let mut dlogp_dlogstd = Vec::with_capacity(u.len());
                for ((m, ls), x) in out.iter().zip(log_std).zip(u) {
                    let z = (x - m) / ls.exp();
                    dlogp_dout.push(z / ls.exp());
                    dlogp_dlogstd.push(z * z - 1.0);
                }
                Ok(PolicyEval {
                    tape,
                    log_prob,
                    entropy,
                    dlogp_dout,
                    dent_dout: vec![0.0; u.len()],
                    dlogp_dlogstd,
                    dent_dlogstd: vec![1.0; u.len()],
                })
            }
            _ => Err(Error::Domain(format!("raw action {raw:?} does not fit this policy"))),
        }
    }

    /// Accumulates the gradient of `c_logp * log_prob + c_ent * entropy` into
    /// the network and log-std gradient buffers.
    pub fn accumulate_grad(
        &self,
        eval: &PolicyEval,
        c_logp: f64,
        c_ent: f64,
        net_grads: &mut [f64],
        log_std_grads: &mut [f64],
    ) -> Result<()> {
        let dout: Vec<f64> = eval
            .dlogp_dout
            .iter()
            .zip(&eval.dent_dout)
            .map(|(a, b)| c_logp * a + c_ent * b)
            .collect();
        self.net.backward_into(&eval.tape, &dout, net_grads)?;
        for ((g, a), b) in log_std_grads.iter_mut().zip(&eval.dlogp_dlogstd).zip(&eval.dent_dlogstd) {
            *g += c_logp * a + c_ent * b;
        }
        Ok(())
    }
}

/// Squashed value and its derivative with respect to the raw input.
fn squash_value(squash: Squash, x: f64, low: f64, high: f64) -> (f64, f64) {
    match squash {
        Squash::Tanh => {
            let c = 0.5 * (high + low);
            let h = 0.5 * (high - low);
            let t = x.tanh();
            (c + h * t, h * (1.0 - t * t))
        }
        Squash::Clip => {
            if x < low {
                (low, 0.0)
            } else if x > high {
                (high, 0.0)
            } else {
                (x, 1.0)
            }
        }
        Squash::Identity => (x, 1.0),
    }
}

/// `sum_i log |da_i / du_i|` of the squashing map.
fn squash_log_det(squash: Squash, u: &[f64], low: &[f64], high: &[f64]) -> f64 {
    match squash {
        Squash::Tanh => u
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let h = 0.5 * (high[i] - low[i]);
                // log(1 - tanh(x)^2) = 2 (ln 2 - x - softplus(-2x))
                h.ln() + 2.0 * (std::f64::consts::LN_2 - x - softplus(-2.0 * x))
            })
            .sum(),
        Squash::Clip | Squash::Identity => 0.0,
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn gaussian_log_prob(mean: &[f64], log_std: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(x)
        .map(|((m, ls), x)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn two_action_policy(logits: [f64; 2]) -> Policy {
        let net = Mlp::from_layers(&[Matrix::zeros(2, 3)], &[logits.to_vec()]).unwrap();
        Policy::from_net(net, &ActionSpace::Discrete { n: 2 }, Squash::Tanh).unwrap()
    }

    #[test]
    fn uniform_logits_sample_evenly() {
        let p = two_action_policy([0.0, 0.0]);
        assert_eq!(p.action_prob(&[1.0, 2.0, 3.0], 0).unwrap(), 0.5);
        let mut rng = Rng::new(0);
        let n = 10_000;
        let zeros = (0..n)
            .filter(|_| p.act(&[0.0; 3], &mut rng).unwrap().action == Action::Discrete(0))
            .count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn peaked_logits_pick_first_action() {
        let p = two_action_policy([10.0, -10.0]);
        // 1 / (1 + e^-20)
        assert!(p.action_prob(&[0.0; 3], 0).unwrap() > 0.999);
        let mut rng = Rng::new(1);
        let hits = (0..10_000)
            .filter(|_| p.act(&[0.0; 3], &mut rng).unwrap().action == Action::Discrete(0))
            .count();
        assert!(hits >= 9_990);
        assert_eq!(p.deterministic_action(&[0.0; 3]).unwrap(), Action::Discrete(0));
    }

    #[test]
    fn zero_weight_continuous_mean_is_bias() {
        let net = Mlp::from_layers(&[Matrix::zeros(2, 3)], &[vec![0.3, -1.2]]).unwrap();
        let space = ActionSpace::Continuous {
            low: vec![-5.0; 2],
            high: vec![5.0; 2],
        };
        let p = Policy::from_net(net, &space, Squash::Identity).unwrap();
        assert_eq!(p.action_mean(&[4.0, 5.0, 6.0]).unwrap(), vec![0.3, -1.2]);
    }

    #[test]
    fn non_finite_output_is_corruption() {
        let net = Mlp::from_layers(&[Matrix::zeros(2, 1)], &[vec![f64::NAN, 0.0]]).unwrap();
        let p = Policy::from_net(net, &ActionSpace::Discrete { n: 2 }, Squash::Tanh).unwrap();
        assert!(matches!(p.act(&[0.0], &mut Rng::new(0)), Err(Error::PolicyCorruption(_))));
    }

    #[test]
    fn state_dimension_is_checked() {
        let p = two_action_policy([0.0, 0.0]);
        assert!(matches!(p.act(&[0.0; 2], &mut Rng::new(0)), Err(Error::Shape(_))));
    }

    #[test]
    fn probabilities_are_positive_and_normalised() {
        let mut rng = Rng::new(2);
        let p = Policy::new(4, &ActionSpace::Discrete { n: 3 }, &[16, 16], Squash::Tanh, &mut rng).unwrap();
        for _ in 0..50 {
            let s: Vec<f64> = (0..4).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
            let probs = p.probabilities(&s).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn raw_from_boundary_action_is_finite() {
        let mut rng = Rng::new(4);
        let space = ActionSpace::Continuous {
            low: vec![-2.0],
            high: vec![2.0],
        };
        let p = Policy::new(3, &space, &[8], Squash::Tanh, &mut rng).unwrap();
        let RawAction::Vector(u) = p.raw_from_action(&Action::Continuous(vec![-2.0])).unwrap() else {
            panic!("expected vector");
        };
        assert!(u[0].is_finite() && u[0] < -3.0);
        assert!(p.log_prob(&[0.0, 1.0, 0.0], &RawAction::Vector(u)).unwrap().is_finite());
    }

    fn gaussian_policy(squash: Squash, seed: u64) -> Policy {
        let mut rng = Rng::new(seed);
        let space = ActionSpace::Continuous {
            low: vec![-2.0, -1.0],
            high: vec![2.0, 3.0],
        };
        let mut p = Policy::new(3, &space, &[6], squash, &mut rng).unwrap();
        // make the mean state-dependent at a visible scale
        for w in p.net_mut().params_mut().iter_mut() {
            *w *= 3.0;
        }
        p.log_std_mut().copy_from_slice(&[-0.4, 0.3]);
        p
    }

    #[test]
    fn gaussian_log_prob_matches_density() {
        for squash in [Squash::Identity, Squash::Clip, Squash::Tanh] {
            let p = gaussian_policy(squash, 5);
            let mut rng = Rng::new(9);
            let s = [0.3, -0.7, 1.1];
            let mu = p.net().predict(&s).unwrap();
            let sd = [(-0.4f64).exp(), 0.3f64.exp()];
            for _ in 0..20 {
                let sample = p.act(&s, &mut rng).unwrap();
                let RawAction::Vector(u) = &sample.raw else { panic!() };
                let mut density = 1.0;
                for i in 0..2 {
                    let z = (u[i] - mu[i]) / sd[i];
                    density *= (-0.5 * z * z).exp() / (sd[i] * (2.0 * std::f64::consts::PI).sqrt());
                    if squash == Squash::Tanh {
                        let half = [2.0, 2.0][i];
                        density /= half * (1.0 - u[i].tanh().powi(2));
                    }
                }
                assert!((sample.log_prob.exp() - density).abs() <= 1e-9 * density.max(1.0));
                assert!((p.log_prob(&s, &sample.raw).unwrap() - sample.log_prob).abs() < 1e-12);
                if let (PolicyHead::Gaussian { low, high, .. }, Action::Continuous(a)) = (p.head(), &sample.action) {
                    if squash != Squash::Identity {
                        assert!(a.iter().zip(low.iter().zip(high)).all(|(x, (l, h))| x >= l && x <= h));
                    }
                }
            }
        }
    }

    #[test]
    fn categorical_log_prob_matches_softmax() {
        let mut rng = Rng::new(6);
        let p = Policy::new(4, &ActionSpace::Discrete { n: 3 }, &[5], Squash::Tanh, &mut rng).unwrap();
        let s = [0.1, 0.2, -0.3, 0.4];
        let logits = p.net().predict(&s).unwrap();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        for a in 0..3 {
            let lp = p.log_prob(&s, &RawAction::Index(a)).unwrap();
            assert!((lp.exp() - logits[a].exp() / z).abs() < 1e-12);
        }
    }

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[i] += h;
                lo[i] -= h;
                (f(&hi) - f(&lo)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_close(analytic: &[f64], numeric: &[f64]) {
        for (a, n) in analytic.iter().zip(numeric) {
            let scale = a.abs().max(n.abs()).max(1e-6);
            assert!((a - n).abs() / scale < 1e-4, "analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn action_prob_state_gradient_matches_finite_differences() {
        let mut rng = Rng::new(7);
        let p = Policy::new(4, &ActionSpace::Discrete { n: 3 }, &[8, 8], Squash::Tanh, &mut rng).unwrap();
        let mut p = p;
        for w in p.net_mut().params_mut().iter_mut() {
            *w *= 4.0;
        }
        for _ in 0..20 {
            let s: Vec<f64> = (0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let a = rng.below(3);
            let (prob, grad) = p.action_prob_with_grad(&s, a).unwrap();
            assert_eq!(prob, p.action_prob(&s, a).unwrap());
            let numeric = central_diff(|x| p.action_prob(x, a).unwrap(), &s, 1e-5);
            assert_close(&grad, &numeric);
        }
    }

    #[test]
    fn action_mean_vjp_matches_finite_differences() {
        for squash in [Squash::Identity, Squash::Tanh] {
            let p = gaussian_policy(squash, 8);
            let w = [0.7, -1.3];
            let s = [0.2, -0.1, 0.5];
            let (mean, grad) = p.action_mean_vjp(&s, &w).unwrap();
            assert_eq!(mean, p.action_mean(&s).unwrap());
            let f = |x: &[f64]| p.action_mean(x).unwrap().iter().zip(&w).map(|(m, w)| m * w).sum::<f64>();
            assert_close(&grad, &central_diff(f, &s, 1e-5));
        }
    }

    #[test]
    fn training_gradients_match_finite_differences() {
        // d(c1 log pi + c2 H)/d(theta, log_std) against perturbing the parameters
        let cases: Vec<(Policy, RawAction)> = vec![
            (gaussian_policy(Squash::Tanh, 10), RawAction::Vector(vec![0.4, -0.9])),
            (
                Policy::new(3, &ActionSpace::Discrete { n: 3 }, &[5], Squash::Tanh, &mut Rng::new(11)).unwrap(),
                RawAction::Index(2),
            ),
        ];
        let s = [0.5, -0.25, 0.75];
        let (c1, c2) = (1.3, 0.6);
        for (p, raw) in cases {
            let eval = p.evaluate(&s, &raw).unwrap();
            let mut g_net = vec![0.0; p.net().num_params()];
            let mut g_std = vec![0.0; p.log_std().len()];
            p.accumulate_grad(&eval, c1, c2, &mut g_net, &mut g_std).unwrap();
            let objective = |q: &Policy| {
                let e = q.evaluate(&s, &raw).unwrap();
                c1 * e.log_prob + c2 * e.entropy
            };
            let theta = p.net().params().to_vec();
            let numeric_net = central_diff(
                |x| {
                    let mut q = p.clone();
                    q.net_mut().params_mut().copy_from_slice(x);
                    objective(&q)
                },
                &theta,
                1e-5,
            );
            assert_close(&g_net, &numeric_net);
            let ls = p.log_std().to_vec();
            let numeric_std = central_diff(
                |x| {
                    let mut q = p.clone();
                    q.log_std_mut().copy_from_slice(x);
                    objective(&q)
                },
                &ls,
                1e-5,
            );
            assert_close(&g_std, &numeric_std);
        }
    }
}
