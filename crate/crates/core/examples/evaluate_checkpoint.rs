//! Trains a small backdoored CartPole agent through the harness, then
//! reloads its checkpoint and trigger from disk and evaluates them, including
//! the inference-time noise sweep.
//!
//! ```text
//! cargo run --release --example evaluate_checkpoint -- /tmp/rl-backdoor-demo
//! ```

use std::path::PathBuf;

use rl_backdoor::agent::{Agent, Algorithm};
use rl_backdoor::envs;
use rl_backdoor::evalkit::{evaluate_backdoor, evaluate_noise};
use rl_backdoor::harness::{run_experiment, ExperimentConfig};
use rl_backdoor::magnitude::TriggerSpec;

fn main() -> rl_backdoor::Result<()> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("rl-backdoor-demo"));
    let mut cfg = ExperimentConfig::defaults("cartpole", Algorithm::Ppo);
    cfg.experiment_id = "evaluate-checkpoint".into();
    cfg.output_dir = Some(root);
    cfg.seeds = vec![0];
    cfg.trainer.total_timesteps = 40_000;
    cfg.timing.fixed_ratio = Some(0.5);
    let run = run_experiment(&cfg, true)?;
    let seed_dir = cfg.seed_dir(0);
    println!("artifacts in {}", seed_dir.display());

    let mut env = envs::make(&cfg.env)?;
    let agent = Agent::load(&seed_dir.join("agent.ckpt"), env.spec(), cfg.trainer.squash)?;
    let trigger = TriggerSpec::load(&seed_dir.join("trigger.json"))?;
    let eps = cfg.implant.eps_action_for(&env.spec().action_space);
    let report = evaluate_backdoor(env.as_mut(), &agent.policy, &trigger, eps, &cfg.eval, 0)?;
    assert_eq!(report, run.reports[0].report, "reloaded agent must evaluate identically");
    println!(
        "trigger dims {:?} = {:?}; NTP {:.2} ASR {:.2} BUS {:.2}",
        trigger.dimensions,
        trigger.magnitudes,
        100.0 * report.ntp,
        100.0 * report.asr,
        100.0 * report.bus
    );
    for row in evaluate_noise(env.as_mut(), &agent.policy, &trigger, eps, report.ntp, &cfg.eval, 0)? {
        println!("  sigma {:.2}: ASR {:6.2} BUS {:6.2}", row.sigma, 100.0 * row.asr, 100.0 * row.bus);
    }
    Ok(())
}
