use std::f64::consts::PI;

use super::{Action, ActionSpace, Env, EnvSpec, EpisodeClock, Transition};
use crate::error::{Error, Result};
use crate::numerics::Rng;

const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;
const DT: f64 = 0.05;
const G: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;

/// Inverted pendulum swing-up with torque in `[-2, 2]`. Observation
/// `[cos theta, sin theta, theta_dot]`, `theta = 0` upright. Reward
/// `-(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)` with `theta` normalised to
/// `[-pi, pi)`; episodes only truncate.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    clock: EpisodeClock,
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "pendulum",
                state_dim: 3,
                action_space: ActionSpace::Continuous {
                    low: vec![-MAX_TORQUE],
                    high: vec![MAX_TORQUE],
                },
                state_bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-MAX_SPEED, MAX_SPEED)],
                max_steps: 200,
                reward_range: (-(PI * PI + 0.1 * MAX_SPEED * MAX_SPEED + 0.001 * MAX_TORQUE * MAX_TORQUE), 0.0),
                reference_returns: (-1200.0, -150.0),
            },
            theta: 0.0,
            theta_dot: 0.0,
            clock: EpisodeClock { elapsed: 0, over: true },
        }
    }

    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.clock = EpisodeClock::default();
    }

    pub fn angle(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    /// Mechanical energy (per unit inertia) of the torque-free dynamics
    /// `theta_ddot = 3g/(2l) sin theta`.
    pub fn energy(&self) -> f64 {
        0.5 * self.theta_dot * self.theta_dot + 1.5 * G / LENGTH * self.theta.cos()
    }

    /// First-order modified energy conserved by the semi-implicit Euler step:
    /// `E + dt/2 * theta_dot * 3g/(2l) sin theta`.
    pub fn shadow_energy(&self) -> f64 {
        self.energy() + 0.5 * DT * self.theta_dot * 1.5 * G / LENGTH * self.theta.sin()
    }

    /// Peak-to-peak span of the potential term, `2 * 3g/(2l)`.
    pub fn energy_scale() -> f64 {
        3.0 * G / LENGTH
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = Rng::new(seed);
        self.theta = rng.uniform_range(-PI, PI);
        self.theta_dot = rng.uniform_range(-1.0, 1.0);
        self.clock = EpisodeClock::default();
        self.observation()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if !self.spec.action_space.contains(action) {
            return Err(Error::Domain(format!("pendulum torque must lie in [-2, 2], got {action:?}")));
        }
        self.clock.check_running()?;
        let u = action.as_continuous().map_or(0.0, |a| a[0]);
        let before = self.observation();
        let th = angle_normalize(self.theta);
        let cost = th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u;
        let new_dot = (self.theta_dot
            + (3.0 * G / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u) * DT)
            .clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += new_dot * DT;
        self.theta_dot = new_dot;
        let truncated = self.clock.tick(false, self.spec.max_steps);
        Ok(Transition {
            state: before,
            action: action.clone(),
            reward: -cost,
            next_state: self.observation(),
            done: false,
            truncated,
        })
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_lies_on_unit_circle() {
        let mut env = Pendulum::new();
        for seed in 0..50 {
            let s = env.reset(seed);
            assert!((s[0] * s[0] + s[1] * s[1] - 1.0).abs() < 1e-12);
            assert!(s[2].abs() <= 1.0);
        }
    }

    #[test]
    fn reward_formula_and_sign() {
        let mut env = Pendulum::new();
        let mut rng = Rng::new(0);
        for seed in 0..20 {
            env.reset(seed);
            for _ in 0..50 {
                let (th, thd) = env.angle();
                let u = rng.uniform_range(-2.0, 2.0);
                let tr = env.step(&Action::Continuous(vec![u])).unwrap();
                let t = angle_normalize(th);
                let expected = -(t * t + 0.1 * thd * thd + 0.001 * u * u);
                assert!((tr.reward - expected).abs() < 1e-12);
                assert!(tr.reward <= 0.0);
            }
        }
    }

    #[test]
    fn out_of_box_torque_is_domain_error() {
        let mut env = Pendulum::new();
        env.reset(0);
        assert!(matches!(env.step(&Action::Continuous(vec![2.5])), Err(Error::Domain(_))));
        assert!(env.step(&Action::Continuous(vec![f64::NAN])).is_err());
        assert!(env.step(&Action::Discrete(0)).is_err());
    }

    #[test]
    fn torque_free_energy_drift_below_one_percent() {
        let mut env = Pendulum::new();
        for seed in 0..20 {
            env.reset(seed);
            let e0 = env.shadow_energy();
            let mut drift: f64 = 0.0;
            for _ in 0..200 {
                env.step(&Action::Continuous(vec![0.0])).unwrap();
                drift = drift.max((env.shadow_energy() - e0).abs() / Pendulum::energy_scale());
            }
            assert!(drift < 0.01, "seed {seed}: drift {drift}");
        }
    }

    #[test]
    fn angle_normalize_range() {
        assert!((angle_normalize(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(angle_normalize(0.0), 0.0);
    }
}
