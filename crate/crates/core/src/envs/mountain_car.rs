use super::{expect_discrete, Action, ActionSpace, Env, EnvSpec, EpisodeClock, Transition};
use crate::error::Result;
use crate::numerics::Rng;

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
const GOAL_VELOCITY: f64 = 0.0;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Mountain car: state `[position, velocity]`, actions `{0: left, 1: none,
/// 2: right}`, reward `-1` per step, episode ends at `position >= 0.5`.
#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    state: [f64; 2],
    clock: EpisodeClock,
}

impl MountainCar {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "mountaincar",
                state_dim: 2,
                action_space: ActionSpace::Discrete { n: 3 },
                state_bounds: vec![(MIN_POSITION, MAX_POSITION), (-MAX_SPEED, MAX_SPEED)],
                max_steps: 200,
                reward_range: (-1.0, -1.0),
                reference_returns: (-200.0, -110.0),
            },
            state: [0.0; 2],
            clock: EpisodeClock { elapsed: 0, over: true },
        }
    }

    pub fn set_state(&mut self, state: [f64; 2]) {
        self.state = state;
        self.clock = EpisodeClock::default();
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = Rng::new(seed);
        self.state = [rng.uniform_range(-0.6, -0.4), 0.0];
        self.clock = EpisodeClock::default();
        self.state.to_vec()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        let a = expect_discrete(&self.spec, action)?;
        self.clock.check_running()?;
        let before = self.state.to_vec();
        let [mut position, mut velocity] = self.state;
        velocity += (a as f64 - 1.0) * FORCE - (3.0 * position).cos() * GRAVITY;
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        position = (position + velocity).clamp(MIN_POSITION, MAX_POSITION);
        if position == MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        self.state = [position, velocity];
        let done = position >= GOAL_POSITION && velocity >= GOAL_VELOCITY;
        let truncated = self.clock.tick(done, self.spec.max_steps);
        Ok(Transition {
            state: before,
            action: action.clone(),
            reward: -1.0,
            next_state: self.state.to_vec(),
            done,
            truncated,
        })
    }

    fn observation(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reaching_goal_ends_episode() {
        let mut env = MountainCar::new();
        env.set_state([0.49, 0.02]);
        let tr = env.step(&Action::Discrete(2)).unwrap();
        assert!(tr.next_state[0] >= GOAL_POSITION);
        assert!(tr.done && !tr.truncated);
        assert_eq!(tr.reward, -1.0);
    }

    #[test]
    fn left_wall_is_inelastic() {
        let mut env = MountainCar::new();
        env.set_state([-1.19, -0.05]);
        let tr = env.step(&Action::Discrete(0)).unwrap();
        assert_eq!(tr.next_state, vec![-1.2, 0.0]);
    }

    #[test]
    fn reset_distribution() {
        let mut env = MountainCar::new();
        for seed in 0..100 {
            let s = env.reset(seed);
            assert!((-0.6..-0.4).contains(&s[0]));
            assert_eq!(s[1], 0.0);
        }
    }
}
