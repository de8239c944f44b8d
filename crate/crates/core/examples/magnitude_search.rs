//! Gradient search for a trigger magnitude. First on a policy whose answer is
//! known (a continuous policy whose mean copies one input), then on a trained
//! CartPole agent, comparing the search against a dense grid.
//!
//! ```text
//! cargo run --release --example magnitude_search
//! ```

use rl_backdoor::agent::{train, Agent, Algorithm, NoHooks, Policy, Squash, TrainerConfig};
use rl_backdoor::envs::{self, Action, ActionSpace};
use rl_backdoor::magnitude::{optimize_magnitude, trigger_loss, MagnitudeConfig, StepSchedule};
use rl_backdoor::numerics::{Matrix, Mlp};

fn main() -> rl_backdoor::Result<()> {
    // mean action = s[1], so the best magnitude on dim 1 is the target itself
    let copy = Policy::from_net(
        Mlp::from_layers(&[Matrix::from_rows(&[vec![0.0, 1.0]])?], &[vec![0.0]])?,
        &ActionSpace::Continuous {
            low: vec![-2.0],
            high: vec![2.0],
        },
        Squash::Identity,
    )?;
    let target = Action::Continuous(vec![0.37]);
    for schedule in [StepSchedule::Constant, StepSchedule::Cosine] {
        let cfg = MagnitudeConfig {
            schedule,
            ..MagnitudeConfig::default()
        };
        let trace = optimize_magnitude(&copy, &[0.0, 0.0], 1, (-1.0, 1.0), &target, &cfg)?;
        println!(
            "copy policy, {schedule:?} step: v* = {:.5} (loss {:.2e}); first iterates {:?}",
            trace.value,
            trace.loss,
            trace.values.iter().take(5).map(|v| format!("{v:.3}")).collect::<Vec<_>>()
        );
    }

    let mut env = envs::make("cartpole")?;
    let mut cfg = TrainerConfig::preset(Algorithm::Ppo, "cartpole");
    cfg.total_timesteps = 40_000;
    let agent = Agent::seeded(env.spec(), &cfg, 2)?;
    let policy = train(Algorithm::Ppo, env.as_mut(), agent, &mut NoHooks, &cfg, 2)?.agent.policy;
    let base = vec![0.0; 4];
    let target = Action::Discrete(0);
    println!("\ntrained CartPole agent, target = push left");
    for dim in 0..4 {
        let range = env.spec().state_bounds[dim];
        let trace = optimize_magnitude(&policy, &base, dim, range, &target, &MagnitudeConfig::default())?;
        let grid_best = (0..=1000)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / 1000.0)
            .map(|v| {
                let mut s = base.clone();
                s[dim] = v;
                (trigger_loss(&policy, &s, &target, 1e-8).unwrap(), v)
            })
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        println!(
            "  dim {dim} range [{:.2}, {:.2}]: search v* = {:>7.3} loss {:.4} | grid v = {:>7.3} loss {:.4} | P(left) = {:.3}",
            range.0,
            range.1,
            trace.value,
            trace.loss,
            grid_best.1,
            grid_best.0,
            (-trace.loss).exp()
        );
    }
    Ok(())
}
