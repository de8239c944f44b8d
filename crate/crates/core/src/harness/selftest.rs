//! Quick oracle checks runnable from the command line: each compares a
//! component against an independent brute-force reference.

use serde::Serialize;

use crate::agent::{Policy, Squash};
use crate::dimension::{estimate_shap, KernelShapConfig};
use crate::envs::{Action, ActionSpace};
use crate::error::Result;
use crate::evalkit::bus;
use crate::magnitude::{optimize_magnitude, trigger_loss, trigger_value_grad, MagnitudeConfig};
use crate::numerics::{Matrix, Mlp, Rng};
use crate::timing::wilcoxon_signed_rank;

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error against the reference.
    pub worst: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

/// Shapley values from the subset-sum definition.
pub fn subset_shapley(f: &dyn Fn(&[f64]) -> f64, s: &[f64], bg: &[f64]) -> Vec<f64> {
    let d = s.len();
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let value = |mask: usize| {
        let x: Vec<f64> = (0..d).map(|j| if mask >> j & 1 == 1 { s[j] } else { bg[j] }).collect();
        f(&x)
    };
    let mut phi = vec![0.0; d];
    for mask in 0..1usize << d {
        let size = mask.count_ones() as usize;
        let v = value(mask);
        for (j, p) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                let w = fact(size) * fact(d - size - 1) / fact(d);
                *p += w * (value(mask | 1 << j) - v);
            }
        }
    }
    phi
}

/// Two-sided signed-rank p-value by enumerating sign flips of the raw
/// differences. Assumes no zero differences.
pub fn sign_flip_p(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut rank = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[idx[j + 1]].abs() == diffs[idx[i]].abs() {
            j += 1;
        }
        for &k in &idx[i..=j] {
            rank[k] = (i + j + 2) as f64 / 2.0;
        }
        i = j + 1;
    }
    let total: f64 = rank.iter().sum();
    let w_obs: f64 = (0..n).filter(|&k| diffs[k] > 0.0).map(|k| rank[k]).sum();
    let dev = (w_obs - total / 2.0).abs();
    let hits = (0..1u64 << n)
        .filter(|m| {
            let w: f64 = (0..n).filter(|&k| m >> k & 1 == 1).map(|k| rank[k]).sum();
            (w - total / 2.0).abs() >= dev - 1e-9
        })
        .count();
    hits as f64 / (1u64 << n) as f64
}

fn shapley_check(rng: &mut Rng) -> Result<SelfCheck> {
    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        let net = Mlp::new(&[d, 8, 1], 1.0, rng)?;
        let f = |x: &[f64]| net.predict(x).map(|y| y[0]).unwrap_or(f64::NAN);
        let s: Vec<f64> = (0..d).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        let bg: Vec<f64> = (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let est = estimate_shap(|x: &[f64]| Ok(f(x)), &s, &bg, &KernelShapConfig::default(), rng)?;
        for (a, b) in est.phi.iter().zip(subset_shapley(&f, &s, &bg)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(check("shapley-exactness", worst, 1e-6))
}

fn wilcoxon_check(rng: &mut Rng) -> Result<SelfCheck> {
    let mut worst: f64 = (wilcoxon_signed_rank(&[0.0; 8], &[1., 2., 3., 4., 5., 6., 7., 8.])? - 0.0078125).abs();
    for n in 2..=10 {
        for _ in 0..5 {
            let prev: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let curr: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let diffs: Vec<f64> = curr.iter().zip(&prev).map(|(c, p)| c - p).collect();
            worst = worst.max((wilcoxon_signed_rank(&prev, &curr)? - sign_flip_p(&diffs)).abs());
        }
    }
    Ok(check("wilcoxon-exactness", worst, 1e-12))
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn gradient_check(rng: &mut Rng) -> Result<SelfCheck> {
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    let mut net = Mlp::new(&[4, 8, 3], 1.0, rng)?;
    let x: Vec<f64> = (0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let w: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
    let loss = |n: &Mlp| n.predict(&x).map(|y| y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
    let (_, tape) = net.forward(&x)?;
    let (grads, _) = net.backward(&tape, &w)?;
    for _ in 0..20 {
        let i = rng.below(net.num_params());
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = loss(&net)?;
        net.params_mut()[i] = orig - h;
        let down = loss(&net)?;
        net.params_mut()[i] = orig;
        worst = worst.max(relative(grads[i], (up - down) / (2.0 * h)));
    }
    let policy = Policy::new(4, &ActionSpace::Discrete { n: 3 }, &[8], Squash::Tanh, rng)?;
    for _ in 0..20 {
        let base: Vec<f64> = (0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let dim = rng.below(4);
        let v = rng.uniform_range(-2.0, 2.0);
        let target = Action::Discrete(rng.below(3));
        let (_, g) = trigger_value_grad(&policy, &base, dim, v, &target, 1e-8)?;
        let at = |v: f64| {
            let mut s = base.clone();
            s[dim] = v;
            trigger_loss(&policy, &s, &target, 1e-8)
        };
        worst = worst.max(relative(g, (at(v + h)? - at(v - h)?) / (2.0 * h)));
    }
    Ok(check("gradient-fidelity", worst, 1e-4))
}

fn magnitude_check() -> Result<SelfCheck> {
    let w = Matrix::from_rows(&[vec![0.0, 1.0, 0.0]])?;
    let space = ActionSpace::Continuous {
        low: vec![-5.0],
        high: vec![5.0],
    };
    let identity = Policy::from_net(Mlp::from_layers(&[w], &[vec![0.0]])?, &space, Squash::Identity)?;
    let w = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 0.0]])?;
    let monotone = Policy::from_net(Mlp::from_layers(&[w], &[vec![0.0, 0.0]])?, &ActionSpace::Discrete { n: 2 }, Squash::Tanh)?;
    let cases: [(&Policy, Vec<f64>, usize, (f64, f64), Action); 3] = [
        (&identity, vec![0.0; 3], 1, (-1.0, 1.0), Action::Continuous(vec![0.3])),
        (&monotone, vec![0.0; 2], 0, (-2.0, 2.0), Action::Discrete(0)),
        (&monotone, vec![0.0; 2], 0, (-2.0, 2.0), Action::Discrete(1)),
    ];
    let mut worst: f64 = 0.0;
    for (policy, base, dim, (lo, hi), target) in cases {
        let found = optimize_magnitude(policy, &base, dim, (lo, hi), &target, &MagnitudeConfig::default())?.value;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=1000 {
            let v = lo + (hi - lo) * i as f64 / 1000.0;
            let mut s = base.clone();
            s[dim] = v;
            let l = trigger_loss(policy, &s, &target, 1e-8)?;
            if l < best.0 {
                best = (l, v);
            }
        }
        worst = worst.max((found - best.1).abs());
    }
    Ok(check("magnitude-oracle", worst, 1e-3))
}

fn bus_check() -> SelfCheck {
    let worst = [((94.42, 94.78), 94.60), ((100.00, 99.99), 99.995), ((50.0, 50.0), 50.0)]
        .iter()
        .map(|&((a, b), want)| (bus(a, b) - want).abs())
        .fold(0.0, f64::max);
    check("bus-arithmetic", worst, 0.01)
}

/// Runs every check with a fixed seed.
pub fn selftest() -> Result<Vec<SelfCheck>> {
    let mut rng = Rng::new(2024);
    Ok(vec![
        shapley_check(&mut rng)?,
        wilcoxon_check(&mut rng)?,
        gradient_check(&mut rng)?,
        magnitude_check()?,
        bus_check(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in selftest().unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn subset_oracle_on_linear_model() {
        let f = |x: &[f64]| 2.0 * x[0] - x[1] + 0.5 * x[2];
        let phi = subset_shapley(&f, &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]);
        assert!((phi[0] - 2.0).abs() < 1e-12 && (phi[1] + 1.0).abs() < 1e-12 && (phi[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sign_flip_worked_case() {
        assert_eq!(sign_flip_p(&[1., 2., 3., 4., 5., 6., 7., 8.]), 0.0078125);
    }
}
