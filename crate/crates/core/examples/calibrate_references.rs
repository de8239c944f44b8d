//! Measures the NTP normalisation bounds of an environment: P_l from a
//! uniform-random policy and P_u from a fully trained clean agent, 20
//! episodes each.
//!
//! ```text
//! cargo run --release --example calibrate_references -- pendulum
//! ```

use rl_backdoor::agent::{evaluate_returns, train, ActionMode, Agent, Algorithm, NoHooks, TrainerConfig};
use rl_backdoor::envs::{self, Action, ActionSpace};
use rl_backdoor::numerics::{mean, std_dev, Rng};

fn main() -> rl_backdoor::Result<()> {
    let env_name = std::env::args().nth(1).unwrap_or_else(|| "cartpole".into());
    let mut env = envs::make(&env_name)?;
    let space = env.spec().action_space.clone();
    let mut rng = Rng::new(99);

    let mut random_returns = Vec::new();
    for episode in 0..20 {
        env.reset(1000 + episode);
        let mut total = 0.0;
        loop {
            let a = match &space {
                ActionSpace::Discrete { n } => Action::Discrete(rng.below(*n)),
                ActionSpace::Continuous { low, high } => {
                    Action::Continuous(low.iter().zip(high).map(|(l, h)| rng.uniform_range(*l, *h)).collect())
                }
            };
            let tr = env.step(&a)?;
            total += tr.reward;
            if tr.ended() {
                break;
            }
        }
        random_returns.push(total);
    }

    let cfg = TrainerConfig::preset(Algorithm::Ppo, &env_name);
    let agent = Agent::seeded(env.spec(), &cfg, 0)?;
    let trained = train(Algorithm::Ppo, env.as_mut(), agent, &mut NoHooks, &cfg, 0)?;
    let clean = evaluate_returns(env.as_mut(), &trained.agent.policy, 20, ActionMode::Deterministic, &mut rng)?;

    let (p_l, p_u) = env.spec().reference_returns;
    println!("{env_name}: random policy {:.2} +- {:.2}", mean(&random_returns), std_dev(&random_returns));
    println!("{env_name}: trained agent {:.2} +- {:.2}", mean(&clean), std_dev(&clean));
    println!("{env_name}: built-in bounds P_l = {p_l}, P_u = {p_u}");
    Ok(())
}
