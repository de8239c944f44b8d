//! Runs the full attack pipeline on one environment and seed, then reports
//! clean performance, attack success and the noise sweep.
//!
//! ```text
//! cargo run --release --example full_attack -- cartpole ppo 200000 0
//! ```

use rl_backdoor::agent::{Algorithm, TrainerConfig};
use rl_backdoor::envs;
use rl_backdoor::evalkit::{evaluate_backdoor, evaluate_noise, EvalConfig};
use rl_backdoor::implant::{run_attack, AttackConfig};

fn main() -> rl_backdoor::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let env_name = args.first().map(String::as_str).unwrap_or("cartpole");
    let algo = Algorithm::parse(args.get(1).map(String::as_str).unwrap_or("ppo"))?;
    let mut trainer = TrainerConfig::preset(algo, env_name);
    if let Some(steps) = args.get(2) {
        trainer.total_timesteps = steps.parse().expect("timesteps must be an integer");
    }
    let seed: u64 = args.get(3).map(|s| s.parse().expect("seed must be an integer")).unwrap_or(0);
    let attack = AttackConfig::default();

    let started = std::time::Instant::now();
    let out = run_attack(env_name, algo, &trainer, &attack, seed, true)?;
    let trigger = out.trigger.expect("attack enabled");
    println!("trained in {:.1}s; trigger {}", started.elapsed().as_secs_f64(), serde_json::to_string(&trigger)?);

    let mut env = envs::make(env_name)?;
    let eps = attack.implant.eps_action_for(&env.spec().action_space);
    let eval = EvalConfig::default();
    let report = evaluate_backdoor(env.as_mut(), &out.agent.policy, &trigger, eps, &eval, seed)?;
    println!(
        "NTP {:.2}  ASR {:.2}  BUS {:.2}  (mean clean return {:.2})",
        100.0 * report.ntp,
        100.0 * report.asr,
        100.0 * report.bus,
        report.returns.iter().sum::<f64>() / report.returns.len() as f64
    );
    for row in evaluate_noise(env.as_mut(), &out.agent.policy, &trigger, eps, report.ntp, &eval, seed)? {
        println!("sigma {:.2}: ASR {:.2} BUS {:.2}", row.sigma, 100.0 * row.asr, 100.0 * row.bus);
    }
    Ok(())
}
