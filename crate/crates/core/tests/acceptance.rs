//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1-5, 11 and 12 are exact checks and fail the target when they
//! fail. Criteria 6-10 are desk-scale training reproductions; their verdict
//! is printed but does not change the exit code. Set `ACCEPTANCE_QUICK=1` to
//! skip them.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rl_backdoor::agent::{train, Agent, Algorithm, NoHooks, Policy, Squash, TrainerConfig};
use rl_backdoor::dimension::{estimate_shap, DimensionStrategy, KernelShapConfig};
use rl_backdoor::envs::{self, Action, ActionSpace};
use rl_backdoor::evalkit::{bus, MagnitudeStrategy};
use rl_backdoor::harness::{run_experiment, ExperimentConfig, ExperimentOutcome};
use rl_backdoor::implant::{run_attack, AttackConfig, BackdoorHooks};
use rl_backdoor::magnitude::{optimize_magnitude, trigger_loss, trigger_value_grad, MagnitudeConfig};
use rl_backdoor::numerics::{Matrix, Mlp, Rng};
use rl_backdoor::timing::wilcoxon_signed_rank;

struct Verdict {
    id: u32,
    passed: bool,
    exact: bool,
}

fn report(id: u32, exact: bool, passed: bool, what: &str, measured: String, started: Instant) -> Verdict {
    println!(
        "criterion {id:>2} {}: {what} | {measured} | {:.1}s",
        if passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    Verdict { id, passed, exact }
}

// ---------- 1: Shapley exactness ----------

/// Shapley values by averaging marginal contributions over all orderings.
fn permutation_shapley(f: &dyn Fn(&[f64]) -> f64, s: &[f64], bg: &[f64]) -> Vec<f64> {
    let d = s.len();
    let values: Vec<f64> = (0..1usize << d)
        .map(|mask| {
            let x: Vec<f64> = (0..d).map(|j| if mask >> j & 1 == 1 { s[j] } else { bg[j] }).collect();
            f(&x)
        })
        .collect();
    let mut phi = vec![0.0; d];
    let mut perm: Vec<usize> = (0..d).collect();
    let mut count = 0.0;
    loop {
        let mut mask = 0usize;
        for &j in &perm {
            let next = mask | 1 << j;
            phi[j] += values[next] - values[mask];
            mask = next;
        }
        count += 1.0;
        // next lexicographic permutation
        let Some(i) = (1..d).rev().find(|&i| perm[i - 1] < perm[i]) else { break };
        let j = (i..d).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    phi.iter().map(|p| p / count).collect()
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut rng = Rng::new(101);
    let cfg = KernelShapConfig::default();
    let (mut worst_mlp, mut worst_lin): (f64, f64) = (0.0, 0.0);
    for d in 2..=8 {
        let net = Mlp::new(&[d, 16, 16, 1], 1.0, &mut rng).unwrap();
        let f = |x: &[f64]| net.predict(x).unwrap()[0];
        let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let linear = Mlp::from_layers(&[Matrix::from_rows(&[w.clone()]).unwrap()], &[vec![0.3]]).unwrap();
        let g = |x: &[f64]| linear.predict(x).unwrap()[0];
        for _ in 0..50 {
            let s: Vec<f64> = (0..d).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
            let bg: Vec<f64> = (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let est = estimate_shap(|x: &[f64]| Ok(f(x)), &s, &bg, &cfg, &mut rng).unwrap();
            for (a, b) in est.phi.iter().zip(permutation_shapley(&f, &s, &bg)) {
                worst_mlp = worst_mlp.max((a - b).abs());
            }
            let est = estimate_shap(|x: &[f64]| Ok(g(x)), &s, &bg, &cfg, &mut rng).unwrap();
            for j in 0..d {
                worst_lin = worst_lin.max((est.phi[j] - w[j] * (s[j] - bg[j])).abs());
            }
        }
    }
    let passed = worst_mlp < 1e-6 && worst_lin < 1e-6 && t.elapsed().as_secs() < 60;
    report(
        1,
        true,
        passed,
        "kernel SHAP = permutation Shapley and linear closed form, D in 2..=8, 50 states each (tol 1e-6)",
        format!("max err mlp {worst_mlp:.2e}, linear {worst_lin:.2e}"),
        t,
    )
}

// ---------- 2: Wilcoxon exactness ----------

fn sign_enumeration_p(prev: &[f64], curr: &[f64]) -> f64 {
    let d: Vec<f64> = curr.iter().zip(prev).map(|(c, p)| c - p).filter(|x| *x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let rank = |x: f64| {
        let below = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
        let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let r: Vec<f64> = d.iter().map(|&x| rank(x)).collect();
    let centre = r.iter().sum::<f64>() / 2.0;
    let observed = (d.iter().zip(&r).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum::<f64>() - centre).abs();
    let extreme = (0u32..1 << n)
        .filter(|signs| {
            let w: f64 = (0..n).filter(|i| signs >> i & 1 == 1).map(|i| r[i]).sum();
            (w - centre).abs() >= observed
        })
        .count();
    extreme as f64 / (1u64 << n) as f64
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let mut rng = Rng::new(202);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = 2 + i % 11;
        // every third sample is rounded to create ties and zero differences
        let draw = |rng: &mut Rng| {
            let x = rng.uniform_range(-1.0, 1.0);
            if i % 3 == 0 {
                (x * 4.0).round() / 4.0
            } else {
                x
            }
        };
        let prev: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let curr: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let p = wilcoxon_signed_rank(&prev, &curr).unwrap();
        worst = worst.max((p - sign_enumeration_p(&prev, &curr)).abs());
    }
    let worked = wilcoxon_signed_rank(&[0.0; 8], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
    report(
        2,
        true,
        worst < 1e-12 && worked == 0.0078125,
        "exact signed-rank p = 2^n sign enumeration, 200 samples n<=12 (tol 1e-12); all-positive n=8 -> 0.0078125",
        format!("max err {worst:.2e}, worked case {worked}"),
        t,
    )
}

// ---------- 3: gradient fidelity ----------

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn criterion_3() -> Verdict {
    let t = Instant::now();
    let mut rng = Rng::new(303);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut net = Mlp::new(&[5, 16, 16, 3], 1.0, &mut rng).unwrap();
    for _ in 0..50 {
        let x: Vec<f64> = (0..5).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let (_, tape) = net.forward(&x).unwrap();
        let (grads, _) = net.backward(&tape, &w).unwrap();
        let i = rng.below(net.num_params());
        let f = |n: &Mlp| n.predict(&x).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = f(&net);
        net.params_mut()[i] = orig - h;
        let down = f(&net);
        net.params_mut()[i] = orig;
        worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * h)));
    }
    let discrete = Policy::new(4, &ActionSpace::Discrete { n: 3 }, &[16, 16], Squash::Tanh, &mut rng).unwrap();
    let box1 = ActionSpace::Continuous {
        low: vec![-2.0],
        high: vec![2.0],
    };
    let continuous = Policy::new(3, &box1, &[16, 16], Squash::Tanh, &mut rng).unwrap();
    for k in 0..50 {
        let (policy, d, target) = if k % 2 == 0 {
            (&discrete, 4, Action::Discrete(rng.below(3)))
        } else {
            (&continuous, 3, Action::Continuous(vec![rng.uniform_range(-2.0, 2.0)]))
        };
        let base: Vec<f64> = (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let dim = rng.below(d);
        let v = rng.uniform_range(-2.0, 2.0);
        let (_, g) = trigger_value_grad(policy, &base, dim, v, &target, 1e-8).unwrap();
        let at = |v: f64| {
            let mut s = base.clone();
            s[dim] = v;
            trigger_loss(policy, &s, &target, 1e-8).unwrap()
        };
        worst = worst.max(rel_err(g, (at(v + h) - at(v - h)) / (2.0 * h)));
    }
    report(
        3,
        true,
        worst < 1e-4,
        "backprop vs central differences, 50 parameter + 50 trigger-value probes (rel tol 1e-4)",
        format!("max rel err {worst:.2e}"),
        t,
    )
}

// ---------- 4: magnitude optimizer oracle ----------

fn grid_optimum(policy: &Policy, base: &[f64], dim: usize, (lo, hi): (f64, f64), target: &Action) -> f64 {
    let mut best = (f64::INFINITY, lo);
    for i in 0..=1000 {
        let v = lo + (hi - lo) * i as f64 / 1000.0;
        let mut s = base.to_vec();
        s[dim] = v;
        let l = trigger_loss(policy, &s, target, 1e-8).unwrap();
        if l < best.0 {
            best = (l, v);
        }
    }
    best.1
}

fn criterion_4() -> Verdict {
    let t = Instant::now();
    let space = ActionSpace::Continuous {
        low: vec![-5.0],
        high: vec![5.0],
    };
    // mean action = s[1]
    let identity = Policy::from_net(
        Mlp::from_layers(&[Matrix::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap()], &[vec![0.0]]).unwrap(),
        &space,
        Squash::Identity,
    )
    .unwrap();
    // logit_0 = 2 s[0] - 1, logit_1 = 0
    let monotone = Policy::from_net(
        Mlp::from_layers(&[Matrix::from_rows(&[vec![2.0, 0.5], vec![0.0, 0.0]]).unwrap()], &[vec![-1.0, 0.0]]).unwrap(),
        &ActionSpace::Discrete { n: 2 },
        Squash::Tanh,
    )
    .unwrap();
    let mut cases: Vec<(&Policy, Vec<f64>, usize, (f64, f64), Action, f64)> = Vec::new();
    for a in [-0.7, -0.2, 0.0, 0.3, 0.9] {
        cases.push((&identity, vec![0.4, 0.0, -0.4], 1, (-1.0, 1.0), Action::Continuous(vec![a]), a));
    }
    cases.push((&monotone, vec![0.0, 0.3], 0, (-3.0, 3.0), Action::Discrete(0), 3.0));
    cases.push((&monotone, vec![0.0, 0.3], 0, (-3.0, 3.0), Action::Discrete(1), -3.0));
    let mut worst: f64 = 0.0;
    let mut known: f64 = 0.0;
    for (policy, base, dim, range, target, optimum) in &cases {
        let found = optimize_magnitude(policy, base, *dim, *range, target, &MagnitudeConfig::default())
            .unwrap()
            .value;
        worst = worst.max((found - grid_optimum(policy, base, *dim, *range, target)).abs());
        known = known.max((found - optimum).abs());
    }
    report(
        4,
        true,
        worst < 1e-3 && known < 1e-3,
        "gradient search vs 1,001-point grid on identity-channel and monotone-logit policies (tol 1e-3)",
        format!("max |v - grid| {worst:.2e}, max |v - known optimum| {known:.2e}"),
        t,
    )
}

// ---------- 5: metric arithmetic ----------

fn criterion_5() -> Verdict {
    let t = Instant::now();
    let acrobot = bus(94.42, 94.78);
    let cartpole = bus(100.00, 99.99);
    let passed = (94.59..=94.61).contains(&acrobot) && (cartpole - 99.99).abs() <= 0.02 && bus(0.0, 0.0) == 0.0;
    report(
        5,
        true,
        passed,
        "BUS from reported pairs: Acrobot/PPO (94.42, 94.78) in [94.59, 94.61], CartPole/PPO (100.00, 99.99) -> 99.99 +- 0.02",
        format!("acrobot {acrobot:.4}, cartpole {cartpole:.4}"),
        t,
    )
}

// ---------- 6-10: desk-scale reproductions ----------

fn experiment(dir: &Path, id: &str, env: &str, seeds: &[u64], edit: impl Fn(&mut ExperimentConfig)) -> ExperimentOutcome {
    let mut cfg = ExperimentConfig::defaults(env, Algorithm::Ppo);
    cfg.experiment_id = id.into();
    cfg.output_dir = Some(dir.to_path_buf());
    cfg.seeds = seeds.to_vec();
    edit(&mut cfg);
    let out = run_experiment(&cfg, false).unwrap();
    for r in &out.reports {
        println!(
            "    {id} seed {}: NTP {:.2} ASR {:.2} BUS {:.2} unfreeze {:?} trigger {:?}={:?}",
            r.seed,
            100.0 * r.report.ntp,
            100.0 * r.report.asr,
            100.0 * r.report.bus,
            r.unfreeze_step,
            r.trigger.as_ref().map(|t| t.dimensions.clone()).unwrap_or_default(),
            r.trigger.as_ref().map(|t| t.magnitudes.clone()).unwrap_or_default(),
        );
    }
    for f in &out.summary.failed {
        println!("    {id} seed {} failed: {}", f.seed, f.error);
    }
    out
}

fn mean_bus(out: &ExperimentOutcome, seeds: &[u64]) -> f64 {
    let xs: Vec<f64> = out
        .reports
        .iter()
        .filter(|r| seeds.contains(&r.seed))
        .map(|r| 100.0 * r.report.bus)
        .collect();
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn successes(out: &ExperimentOutcome, threshold: f64) -> usize {
    out.reports
        .iter()
        .filter(|r| r.report.asr >= threshold && r.report.ntp >= threshold)
        .count()
}

fn training_criteria(dir: &Path) -> Vec<Verdict> {
    let mut v = Vec::new();
    let seeds = [0, 1, 2, 3, 4];
    let ablation_seeds = [0, 1, 2];

    let t = Instant::now();
    let cartpole = experiment(dir, "c6", "cartpole", &seeds, |_| {});
    let ok = successes(&cartpole, 0.90);
    v.push(report(
        6,
        false,
        ok >= 3,
        "CartPole+PPO 200k: ASR >= 0.90 and NTP >= 0.90 on >= 3 of 5 seeds",
        format!("{ok}/5 seeds"),
        t,
    ));

    let t = Instant::now();
    let pendulum = experiment(dir, "c7", "pendulum", &seeds, |_| {});
    let ok = successes(&pendulum, 0.80);
    v.push(report(
        7,
        false,
        ok >= 3,
        "Pendulum+PPO 300k: ASR >= 0.80 and NTP >= 0.80 on >= 3 of 5 seeds",
        format!("{ok}/5 seeds"),
        t,
    ));

    let t = Instant::now();
    let rand = experiment(dir, "c8-rand", "cartpole", &ablation_seeds, |c| c.magnitude.strategy = MagnitudeStrategy::Rand);
    let (opt_bus, rand_bus) = (mean_bus(&cartpole, &ablation_seeds), mean_bus(&rand, &ablation_seeds));
    v.push(report(
        8,
        false,
        opt_bus - rand_bus >= 20.0,
        "CartPole/PPO 3 seeds: Optimized mean BUS exceeds Rand mean BUS by >= 20 points",
        format!("optimized {opt_bus:.2}, rand {rand_bus:.2}, gap {:.2}", opt_bus - rand_bus),
        t,
    ));

    let t = Instant::now();
    let random_dim = experiment(dir, "c9-random", "cartpole", &ablation_seeds, |c| {
        c.dimension.strategy = DimensionStrategy::Random;
        c.dimension.k = 1;
    });
    let random_bus = mean_bus(&random_dim, &ablation_seeds);
    v.push(report(
        9,
        false,
        opt_bus >= random_bus,
        "CartPole/PPO 3 seeds: SHAP-Top1 mean BUS >= random single dimension mean BUS",
        format!("shap-top1 {opt_bus:.2}, random {random_bus:.2}"),
        t,
    ));

    let t = Instant::now();
    let by_sigma: BTreeMap<String, f64> = cartpole
        .summary
        .noise
        .iter()
        .map(|n| (format!("{:.2}", n.sigma), n.bus.mean))
        .collect();
    let (b0, b5, b10) = (by_sigma["0.00"], by_sigma["0.05"], by_sigma["0.10"]);
    v.push(report(
        10,
        false,
        b0 >= b5 && b5 >= b10 && b0 - b10 >= 10.0,
        "CartPole backdoor: BUS(0) >= BUS(0.05) >= BUS(0.10) and drop >= 10 points at 0.10",
        format!(
            "mean BUS by sigma {}",
            by_sigma.iter().map(|(s, b)| format!("{s}:{b:.2}")).collect::<Vec<_>>().join(" ")
        ),
        t,
    ));
    v
}

// ---------- 11: hook transparency ----------

fn criterion_11() -> Verdict {
    let t = Instant::now();
    let mut all = true;
    let mut notes = Vec::new();
    for (env_name, steps) in [("cartpole", 12_000u64), ("pendulum", 8_000)] {
        let mut trainer = TrainerConfig::preset(Algorithm::Ppo, env_name);
        trainer.total_timesteps = steps;
        trainer.n_steps = 1024;
        let seed = 5;
        let mut env = envs::make(env_name).unwrap();
        let spec = env.spec().clone();
        let clean = train(Algorithm::Ppo, env.as_mut(), Agent::seeded(&spec, &trainer, seed).unwrap(), &mut NoHooks, &trainer, seed).unwrap();

        let mut disabled = AttackConfig::default();
        disabled.implant.enabled = false;
        let off = run_attack(env_name, Algorithm::Ppo, &trainer, &disabled, seed, false).unwrap();

        // attack enabled but never unfrozen: the monitor evaluates on its own
        // environment and random stream, so training must not change
        let mut frozen = AttackConfig::default();
        frozen.timing.eval_interval = 2000;
        frozen.timing.fixed_ratio = Some(1.0);
        let mut hooks = BackdoorHooks::new(&spec, &frozen, steps, seed, false).unwrap();
        let mut env2 = envs::make(env_name).unwrap();
        let watched = train(Algorithm::Ppo, env2.as_mut(), Agent::seeded(&spec, &trainer, seed).unwrap(), &mut hooks, &trainer, seed).unwrap();

        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        clean.agent.write(&mut a).unwrap();
        off.agent.write(&mut b).unwrap();
        watched.agent.write(&mut c).unwrap();
        let mut la = Vec::new();
        let mut lb = Vec::new();
        clean.log.write_csv(&mut la).unwrap();
        off.log.write_csv(&mut lb).unwrap();
        let same = a == b && la == lb && a == c && clean.log.rows.len() == watched.log.rows.len();
        all &= same;
        notes.push(format!("{env_name}: {}", if same { "identical" } else { "differs" }));
    }
    report(
        11,
        true,
        all,
        "attack-disabled and frozen-only pipelines are bit-identical to the clean trainer",
        notes.join(", "),
        t,
    )
}

// ---------- 12: determinism ----------

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in std::fs::read_dir(&p).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_12() -> Verdict {
    let t = Instant::now();
    let mut same = true;
    let mut files = 0;
    for env_name in ["cartpole", "pendulum"] {
        // same output root both times: the echoed config records it
        let dir = tempfile::tempdir().unwrap();
        let trees: Vec<_> = (0..2)
            .map(|_| {
                let _ = std::fs::remove_dir_all(dir.path().join("default"));
                let mut cfg = ExperimentConfig::defaults(env_name, Algorithm::Ppo);
                cfg.output_dir = Some(dir.path().to_path_buf());
                cfg.seeds = vec![3, 4];
                cfg.workers = 2;
                cfg.trainer.total_timesteps = 12_000;
                cfg.trainer.n_steps = 1024;
                cfg.timing.eval_interval = 1000;
                cfg.timing.window = 2;
                cfg.timing.alpha = 0.3;
                cfg.eval.n_eval = 3;
                cfg.eval.n_activations = 20;
                cfg.eval.n_episodes = 2;
                run_experiment(&cfg, false).unwrap();
                read_tree(dir.path())
            })
            .collect();
        files += trees[0].len();
        same &= trees[0] == trees[1];
    }
    report(
        12,
        true,
        same,
        "rerunning a (config, seed) experiment reproduces every artifact byte for byte",
        format!("{files} files compared"),
        t,
    )
}

fn main() {
    // the libtest flags cargo passes are irrelevant here
    let quick = std::env::var("ACCEPTANCE_QUICK").is_ok_and(|v| v == "1");
    let mut verdicts = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5()];
    if quick {
        for id in 6..=10 {
            println!("criterion {id:>2} SKIP: ACCEPTANCE_QUICK=1");
        }
    } else {
        let dir = tempfile::tempdir().unwrap();
        verdicts.extend(training_criteria(dir.path()));
    }
    verdicts.push(criterion_11());
    verdicts.push(criterion_12());
    verdicts.sort_by_key(|v| v.id);
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.passed).map(|v| v.id).collect();
    let exact_failed = verdicts.iter().any(|v| v.exact && !v.passed);
    println!(
        "acceptance: {} of {} criteria passed{}",
        verdicts.len() - failed.len(),
        verdicts.len(),
        if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }
    );
    if exact_failed {
        std::process::exit(1);
    }
}
