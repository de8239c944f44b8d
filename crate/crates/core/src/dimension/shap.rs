use crate::agent::Policy;
use crate::envs::Action;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Scalar policy output that attributions explain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainTarget {
    /// `pi(a | s)` of a discrete action.
    Probability(usize),
    /// One component of the deterministic continuous action.
    MeanComponent(usize),
}

impl ExplainTarget {
    /// Discrete policies explain the target-action probability. Continuous
    /// policies explain the mean-action component with the largest gap
    /// between the target and the average clean action over `clean_states`.
    pub fn for_policy(policy: &Policy, target: &Action, clean_states: &[Vec<f64>]) -> Result<Self> {
        match target {
            Action::Discrete(a) => {
                if *a >= policy.action_dim() {
                    return Err(Error::Domain(format!("target action {a} out of range")));
                }
                Ok(ExplainTarget::Probability(*a))
            }
            Action::Continuous(t) => {
                if t.len() != policy.action_dim() {
                    return Err(Error::Shape(format!("target has {} dims, policy {}", t.len(), policy.action_dim())));
                }
                let mut avg = vec![0.0; t.len()];
                for s in clean_states {
                    for (acc, m) in avg.iter_mut().zip(policy.action_mean(s)?) {
                        *acc += m;
                    }
                }
                let n = clean_states.len().max(1) as f64;
                let mut best = 0;
                let mut best_gap = f64::NEG_INFINITY;
                for (i, (ti, ai)) in t.iter().zip(&avg).enumerate() {
                    let gap = (ti - ai / n).abs();
                    if gap > best_gap {
                        best = i;
                        best_gap = gap;
                    }
                }
                Ok(ExplainTarget::MeanComponent(best))
            }
        }
    }
}

/// The scalar `f(s)` explained by SHAP.
pub fn explained_output(policy: &Policy, state: &[f64], target: ExplainTarget) -> Result<f64> {
    match target {
        ExplainTarget::Probability(a) => policy.action_prob(state, a),
        ExplainTarget::MeanComponent(i) => policy
            .action_mean(state)?
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("action component {i} out of range"))),
    }
}

/// State where dimensions absent from the coalition take their background
/// mean.
pub fn build_perturbed_state(state: &[f64], coalition: &[bool], background: &[f64]) -> Vec<f64> {
    assert!(state.len() == coalition.len() && state.len() == background.len(), "perturbation inputs differ in length");
    state
        .iter()
        .zip(coalition)
        .zip(background)
        .map(|((s, &keep), b)| if keep { *s } else { *b })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight `(D-1) / (C(D,m) m (D-m))` of a coalition of size
/// `m`; infinite for the empty and full coalitions.
pub fn shapley_kernel_weight(d: usize, m: usize) -> f64 {
    assert!(m <= d, "coalition size {m} exceeds dimension {d}");
    if m == 0 || m == d {
        return f64::INFINITY;
    }
    (d - 1) as f64 / (binomial(d, m) * m as f64 * (d - m) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelShapConfig {
    /// Enumerate every coalition when `D` is at most this.
    pub max_enumerate_dim: usize,
    /// Sampled coalitions otherwise.
    pub max_coalitions: usize,
}

impl Default for KernelShapConfig {
    fn default() -> Self {
        Self {
            max_enumerate_dim: 12,
            max_coalitions: 2048,
        }
    }
}

/// Local explanation of one state: `base + sum(phi) == f(state)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalShap {
    pub phi: Vec<f64>,
    pub base: f64,
}

fn coalitions(d: usize, cfg: &KernelShapConfig, rng: &mut Rng) -> Vec<Vec<bool>> {
    let from_mask = |mask: u64| (0..d).map(|j| mask >> j & 1 == 1).collect::<Vec<bool>>();
    if d <= cfg.max_enumerate_dim {
        return (1..(1u64 << d) - 1).map(from_mask).collect();
    }
    // uniform size, uniform subset of that size, without repeats
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(cfg.max_coalitions);
    let mut attempts = 0usize;
    while out.len() < cfg.max_coalitions && attempts < cfg.max_coalitions * 50 {
        attempts += 1;
        let m = 1 + rng.below(d - 1);
        let mut idx: Vec<usize> = (0..d).collect();
        rng.shuffle(&mut idx);
        let mut z = vec![false; d];
        for &j in &idx[..m] {
            z[j] = true;
        }
        if seen.insert(z.clone()) {
            out.push(z);
        }
    }
    out
}

/// Kernel SHAP for one state. The empty and full coalitions enter as exact
/// constraints `g(0) = f(background)` and `g(1) = f(state)`; the remaining
/// coalitions are fitted by Shapley-kernel-weighted least squares.
pub fn estimate_shap<F>(f: F, state: &[f64], background: &[f64], cfg: &KernelShapConfig, rng: &mut Rng) -> Result<LocalShap>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = state.len();
    if d == 0 || background.len() != d {
        return Err(Error::Shape(format!("state has {d} dims, background {}", background.len())));
    }
    let base = f(background)?;
    let full = f(state)?;
    let delta = full - base;
    if d == 1 {
        return Ok(LocalShap { phi: vec![delta], base });
    }
    let zs = coalitions(d, cfg, rng);
    // eliminate phi_{d-1} = delta - sum_{j<d-1} phi_j
    let p = d - 1;
    let mut xtwx = Matrix::zeros(p, p);
    let mut xtwy = vec![0.0; p];
    for z in &zs {
        let m = z.iter().filter(|&&b| b).count();
        let w = shapley_kernel_weight(d, m);
        let y = f(&build_perturbed_state(state, z, background))? - base - if z[p] { delta } else { 0.0 };
        let last = if z[p] { 1.0 } else { 0.0 };
        let x: Vec<f64> = (0..p).map(|j| if z[j] { 1.0 } else { 0.0 } - last).collect();
        for i in 0..p {
            if x[i] == 0.0 {
                continue;
            }
            xtwy[i] += w * x[i] * y;
            for j in 0..p {
                let v = xtwx.get(i, j) + w * x[i] * x[j];
                xtwx.set(i, j, v);
            }
        }
    }
    let head = xtwx
        .solve(&xtwy)
        .map_err(|e| Error::Estimation(format!("coalition design is rank deficient with {} coalitions: {e}", zs.len())))?;
    let mut phi = head;
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(LocalShap { phi, base })
}

/// Attributions over a set of explained states.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// One row of `phi` per explained state.
    pub phi: Vec<Vec<f64>>,
    pub base: Vec<f64>,
    /// Mean absolute SHAP value per dimension.
    pub importance: Vec<f64>,
}

impl Attribution {
    pub fn from_rows(phi: Vec<Vec<f64>>, base: Vec<f64>) -> Self {
        let importance = global_importance(&phi);
        Self { phi, base, importance }
    }

    /// Dimensions ordered by decreasing importance, ties to the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        rank_dimensions(&self.importance)
    }

    /// CSV with columns `dimension,importance,rank` (rank 1 = most important).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut rank = vec![0usize; self.importance.len()];
        for (r, &j) in self.ranking().iter().enumerate() {
            rank[j] = r + 1;
        }
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(["dimension", "importance", "rank"]).map_err(crate::agent::csv_error)?;
        for (j, imp) in self.importance.iter().enumerate() {
            writer
                .write_record([j.to_string(), imp.to_string(), rank[j].to_string()])
                .map_err(crate::agent::csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// `I_j = mean_i |phi_ij|`.
pub fn global_importance(phi: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = phi.first() else {
        return Vec::new();
    };
    let mut imp = vec![0.0; first.len()];
    for row in phi {
        for (acc, v) in imp.iter_mut().zip(row) {
            *acc += v.abs();
        }
    }
    imp.iter_mut().for_each(|x| *x /= phi.len() as f64);
    imp
}

pub fn rank_dimensions(importance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    order
}

/// The `k` most important dimensions, most important first.
pub fn select_trigger_dimensions(attribution: &Attribution, k: usize) -> Result<Vec<usize>> {
    let d = attribution.importance.len();
    if k == 0 || k > d {
        return Err(Error::config("dimension.k", format!("K must lie in 1..={d}, got {k}")));
    }
    Ok(attribution.ranking().into_iter().take(k).collect())
}

/// Per-dimension mean of a state set.
pub fn background_mean(states: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = states.first().ok_or_else(|| Error::Estimation("background set is empty".into()))?;
    let mut mean = vec![0.0; first.len()];
    for s in states {
        if s.len() != mean.len() {
            return Err(Error::Shape("background states differ in dimension".into()));
        }
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= states.len() as f64);
    Ok(mean)
}

/// Explains every state in `explain` against the mean of `background`.
pub fn explain<F>(f: F, explain: &[Vec<f64>], background: &[Vec<f64>], cfg: &KernelShapConfig, rng: &mut Rng) -> Result<Attribution>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if explain.is_empty() {
        return Err(Error::Estimation("no states to explain".into()));
    }
    let v_bg = background_mean(background)?;
    let mut phi = Vec::with_capacity(explain.len());
    let mut base = Vec::with_capacity(explain.len());
    for s in explain {
        let local = estimate_shap(&f, s, &v_bg, cfg, rng)?;
        phi.push(local.phi);
        base.push(local.base);
    }
    Ok(Attribution::from_rows(phi, base))
}

/// Explains a policy's output for `target`.
pub fn explain_policy(
    policy: &Policy,
    target: ExplainTarget,
    explain_states: &[Vec<f64>],
    background: &[Vec<f64>],
    cfg: &KernelShapConfig,
    rng: &mut Rng,
) -> Result<Attribution> {
    explain(|s| explained_output(policy, s, target), explain_states, background, cfg, rng)
}
