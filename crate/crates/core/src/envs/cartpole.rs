use super::{expect_discrete, Action, ActionSpace, Env, EnvSpec, EpisodeClock, Transition};
use crate::error::Result;
use crate::numerics::Rng;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
/// Half the pole length.
const LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
/// 12 degrees.
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const X_THRESHOLD: f64 = 2.4;

/// Cart-pole balancing: state `[x, x_dot, theta, theta_dot]`, actions
/// `{0: push left, 1: push right}`, reward `+1` per step including the
/// terminating one.
///
/// Trigger box: `x in [-4.8, 4.8]`, `theta in [-0.418, 0.418]` (twice the
/// termination thresholds) and both velocities clamped to `[-5, 5]`.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
    clock: EpisodeClock,
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "cartpole",
                state_dim: 4,
                action_space: ActionSpace::Discrete { n: 2 },
                state_bounds: vec![
                    (-2.0 * X_THRESHOLD, 2.0 * X_THRESHOLD),
                    (-5.0, 5.0),
                    (-2.0 * THETA_THRESHOLD, 2.0 * THETA_THRESHOLD),
                    (-5.0, 5.0),
                ],
                max_steps: 500,
                reward_range: (0.0, 1.0),
                reference_returns: (22.43, 500.0),
            },
            state: [0.0; 4],
            clock: EpisodeClock { elapsed: 0, over: true },
        }
    }

    /// Overwrites the physical state (used by tests).
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.clock = EpisodeClock::default();
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = Rng::new(seed);
        for s in &mut self.state {
            *s = rng.uniform_range(-0.05, 0.05);
        }
        self.clock = EpisodeClock::default();
        self.state.to_vec()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        let a = expect_discrete(&self.spec, action)?;
        self.clock.check_running()?;
        let before = self.state.to_vec();
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if a == 1 { FORCE_MAG } else { -FORCE_MAG };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp) / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        let [x, _, theta, _] = self.state;
        let done = !(-X_THRESHOLD..=X_THRESHOLD).contains(&x) || !(-THETA_THRESHOLD..=THETA_THRESHOLD).contains(&theta);
        let truncated = self.clock.tick(done, self.spec.max_steps);
        Ok(Transition {
            state: before,
            action: action.clone(),
            reward: 1.0,
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
    fn reset_is_within_initial_box_and_deterministic() {
        let mut env = CartPole::new();
        for seed in 0..200 {
            let s = env.reset(seed);
            assert!(s.iter().all(|v| (-0.05..=0.05).contains(v)));
        }
        assert_eq!(env.reset(9), env.reset(9));
    }

    #[test]
    fn pole_beyond_twelve_degrees_terminates() {
        let mut env = CartPole::new();
        env.set_state([0.0, 0.0, THETA_THRESHOLD - 1e-4, 2.0]);
        let tr = env.step(&Action::Discrete(1)).unwrap();
        assert!(tr.next_state[2] > THETA_THRESHOLD);
        assert!(tr.done);
        assert_eq!(tr.reward, 1.0);

        env.set_state([0.0, 0.0, 0.01, 0.0]);
        assert!(!env.step(&Action::Discrete(0)).unwrap().done);
    }

    #[test]
    fn one_euler_step_matches_hand_computation() {
        let mut env = CartPole::new();
        env.set_state([0.0, 0.0, 0.0, 0.0]);
        let tr = env.step(&Action::Discrete(1)).unwrap();
        // theta = 0: temp = F / M, theta_acc = -temp / (l * (4/3 - m/M)), x_acc = temp - ml * theta_acc / M.
        let temp = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        assert_eq!(tr.next_state[0], 0.0);
        assert!((tr.next_state[1] - 0.02 * x_acc).abs() < 1e-15);
        assert_eq!(tr.next_state[2], 0.0);
        assert!((tr.next_state[3] - 0.02 * theta_acc).abs() < 1e-15);
    }

    #[test]
    fn cart_position_bound() {
        let env = CartPole::new();
        assert_eq!(env.spec().state_bounds[0], (-4.8, 4.8));
    }

    #[test]
    fn rejects_invalid_actions() {
        let mut env = CartPole::new();
        env.reset(0);
        assert!(env.step(&Action::Discrete(2)).is_err());
        assert!(env.step(&Action::Continuous(vec![0.0])).is_err());
    }
}
