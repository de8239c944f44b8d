use std::f64::consts::PI;

use super::{expect_discrete, Action, ActionSpace, Env, EnvSpec, EpisodeClock, Transition};
use crate::error::Result;
use crate::numerics::Rng;

const DT: f64 = 0.2;
const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_1: f64 = 0.5;
const LINK_COM_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const GRAVITY: f64 = 9.8;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;
const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];

/// Two-link acrobot swing-up. Observation
/// `[cos t1, sin t1, cos t2, sin t2, t1_dot, t2_dot]`, actions are torques
/// `{-1, 0, +1}` on the second joint, reward `-1` until the tip rises one
/// link length above the pivot.
#[derive(Debug, Clone)]
pub struct Acrobot {
    spec: EnvSpec,
    /// `[theta1, theta2, theta1_dot, theta2_dot]`
    state: [f64; 4],
    clock: EpisodeClock,
}

impl Acrobot {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "acrobot",
                state_dim: 6,
                action_space: ActionSpace::Discrete { n: 3 },
                state_bounds: vec![
                    (-1.0, 1.0),
                    (-1.0, 1.0),
                    (-1.0, 1.0),
                    (-1.0, 1.0),
                    (-MAX_VEL_1, MAX_VEL_1),
                    (-MAX_VEL_2, MAX_VEL_2),
                ],
                max_steps: 500,
                reward_range: (-1.0, 0.0),
                reference_returns: (-500.0, -80.0),
            },
            state: [0.0; 4],
            clock: EpisodeClock { elapsed: 0, over: true },
        }
    }

    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.clock = EpisodeClock::default();
    }

    fn terminal(&self) -> bool {
        let [t1, t2, ..] = self.state;
        -t1.cos() - (t2 + t1).cos() > 1.0
    }
}

impl Default for Acrobot {
    fn default() -> Self {
        Self::new()
    }
}

fn derivatives(s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2, l1, lc1, lc2, i1, i2, g) = (
        LINK_MASS_1,
        LINK_MASS_2,
        LINK_LENGTH_1,
        LINK_COM_1,
        LINK_COM_2,
        LINK_MOI,
        LINK_MOI,
        GRAVITY,
    );
    let [theta1, theta2, dtheta1, dtheta2] = s;
    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: [f64; 4], torque: f64, dt: f64) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]];
    let k1 = derivatives(s, torque);
    let k2 = derivatives(add(s, k1, dt / 2.0), torque);
    let k3 = derivatives(add(s, k2, dt / 2.0), torque);
    let k4 = derivatives(add(s, k3, dt), torque);
    let mut out = s;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Wraps into `[-pi, pi)`.
fn wrap(x: f64) -> f64 {
    let w = 2.0 * PI;
    let mut x = x;
    while x > PI {
        x -= w;
    }
    while x < -PI {
        x += w;
    }
    x
}

impl Env for Acrobot {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = Rng::new(seed);
        for s in &mut self.state {
            *s = rng.uniform_range(-0.1, 0.1);
        }
        self.clock = EpisodeClock::default();
        self.observation()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        let a = expect_discrete(&self.spec, action)?;
        self.clock.check_running()?;
        let before = self.observation();
        let ns = rk4(self.state, TORQUES[a], DT);
        self.state = [
            wrap(ns[0]),
            wrap(ns[1]),
            ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
            ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
        ];
        let done = self.terminal();
        let truncated = self.clock.tick(done, self.spec.max_steps);
        Ok(Transition {
            state: before,
            action: action.clone(),
            reward: if done { 0.0 } else { -1.0 },
            next_state: self.observation(),
            done,
            truncated,
        })
    }

    fn observation(&self) -> Vec<f64> {
        let [t1, t2, d1, d2] = self.state;
        vec![t1.cos(), t1.sin(), t2.cos(), t2.sin(), d1, d2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanging_at_rest_stays_at_rest() {
        let mut env = Acrobot::new();
        env.set_state([0.0; 4]);
        let tr = env.step(&Action::Discrete(1)).unwrap();
        for v in &tr.next_state[4..] {
            assert!(v.abs() < 1e-12);
        }
        assert_eq!(tr.reward, -1.0);
    }

    #[test]
    fn raised_tip_terminates_with_zero_reward() {
        let mut env = Acrobot::new();
        env.set_state([PI, 0.0, 0.0, 0.0]);
        let tr = env.step(&Action::Discrete(1)).unwrap();
        assert!(tr.done);
        assert_eq!(tr.reward, 0.0);
    }

    #[test]
    fn observation_is_on_unit_circles() {
        let mut env = Acrobot::new();
        let s = env.reset(3);
        assert!((s[0] * s[0] + s[1] * s[1] - 1.0).abs() < 1e-12);
        assert!((s[2] * s[2] + s[3] * s[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_range() {
        for x in [-10.0, -PI - 0.1, 0.3, PI + 0.1, 25.0] {
            let w = wrap(x);
            assert!((-PI..=PI).contains(&w));
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((x - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }
}
