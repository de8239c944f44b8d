//! Ranks the state dimensions of a briefly trained CartPole agent by kernel
//! SHAP importance for the probability of pushing left, then shows how the
//! top-K choice changes with K.
//!
//! ```text
//! cargo run --release --example shap_dimensions
//! ```

use rl_backdoor::agent::{train, Agent, Algorithm, NoHooks, TrainerConfig};
use rl_backdoor::dimension::{explain_policy, select_trigger_dimensions, ExplainTarget, KernelShapConfig};
use rl_backdoor::envs::{self, Action};
use rl_backdoor::numerics::Rng;

const NAMES: [&str; 4] = ["cart position", "cart velocity", "pole angle", "pole angular velocity"];

fn main() -> rl_backdoor::Result<()> {
    let mut env = envs::make("cartpole")?;
    let mut cfg = TrainerConfig::preset(Algorithm::Ppo, "cartpole");
    cfg.total_timesteps = 40_000;
    let agent = Agent::seeded(env.spec(), &cfg, 1)?;
    let trained = train(Algorithm::Ppo, env.as_mut(), agent, &mut NoHooks, &cfg, 1)?;
    let policy = &trained.agent.policy;

    // clean states visited by the deterministic policy
    let mut states = Vec::new();
    for episode in 0..5 {
        let mut s = env.reset(100 + episode);
        loop {
            states.push(s.clone());
            let tr = env.step(&policy.deterministic_action(&s)?)?;
            if tr.ended() {
                break;
            }
            s = tr.next_state;
        }
    }
    println!("collected {} clean states", states.len());

    let mut rng = Rng::new(7);
    let target = Action::Discrete(0);
    let what = ExplainTarget::for_policy(policy, &target, &states)?;
    let explain: Vec<Vec<f64>> = states.iter().step_by(states.len() / 100 + 1).cloned().collect();
    let att = explain_policy(policy, what, &explain, &states, &KernelShapConfig::default(), &mut rng)?;

    println!("\nglobal importance (mean |phi|) over {} states:", explain.len());
    for (rank, j) in att.ranking().into_iter().enumerate() {
        println!("  #{} dim {j} {:<22} {:.4}", rank + 1, NAMES[j], att.importance[j]);
    }
    for k in 1..=4 {
        println!("top-{k} trigger dimensions: {:?}", select_trigger_dimensions(&att, k)?);
    }
    att.write_csv(std::io::stdout())?;
    Ok(())
}
