//! Trains a clean agent and reports deterministic evaluation returns.
//!
//! ```text
//! cargo run --release --example clean_training -- cartpole ppo 200000 0
//! ```

use rl_backdoor::agent::{evaluate_returns, train, ActionMode, Agent, Algorithm, NoHooks, TrainerConfig};
use rl_backdoor::envs;
use rl_backdoor::numerics::{mean, Rng};

fn main() -> rl_backdoor::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let env_name = args.first().map(String::as_str).unwrap_or("cartpole");
    let algo = Algorithm::parse(args.get(1).map(String::as_str).unwrap_or("ppo"))?;
    let mut cfg = TrainerConfig::preset(algo, env_name);
    if let Some(steps) = args.get(2) {
        cfg.total_timesteps = steps.parse().expect("timesteps must be an integer");
    }
    let seed: u64 = args.get(3).map(|s| s.parse().expect("seed must be an integer")).unwrap_or(0);

    let mut env = envs::make(env_name)?;
    let agent = Agent::seeded(env.spec(), &cfg, seed)?;
    let started = std::time::Instant::now();
    let out = train(algo, env.as_mut(), agent, &mut NoHooks, &cfg, seed)?;
    for row in out.log.rows.iter().step_by((out.log.rows.len() / 10).max(1)) {
        println!(
            "t={:>7} mean_return={:>8.2} entropy={:.3}",
            row.timestep,
            row.mean_return.unwrap_or(f64::NAN),
            row.entropy
        );
    }
    let returns = evaluate_returns(env.as_mut(), &out.agent.policy, 20, ActionMode::Deterministic, &mut Rng::new(seed ^ 0xe7a1))?;
    println!(
        "{env_name}/{}: {} steps, {} episodes in {:.1}s; deterministic eval mean {:.2} over 20 episodes",
        algo.name(),
        out.timesteps,
        out.episodes,
        started.elapsed().as_secs_f64(),
        mean(&returns)
    );
    Ok(())
}
