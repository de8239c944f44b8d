//! Classic-control environments with the standard published dynamics.
//!
//! | env         | D | actions          | T   | integrator            |
//! |-------------|---|------------------|-----|-----------------------|
//! | cartpole    | 4 | discrete(2)      | 500 | explicit Euler, 0.02s |
//! | mountaincar | 2 | discrete(3)      | 200 | velocity-first update |
//! | acrobot     | 6 | discrete(3)      | 500 | RK4, 0.2s             |
//! | pendulum    | 3 | box [-2, 2]      | 200 | semi-implicit Euler   |
//!
//! Every environment also carries a finite per-dimension box used as the
//! trigger search range; velocity dimensions that are physically unbounded
//! get documented clamp ranges there.

mod acrobot;
mod cartpole;
mod mountain_car;
mod pendulum;

pub use acrobot::Acrobot;
pub use cartpole::CartPole;
pub use mountain_car::MountainCar;
pub use pendulum::Pendulum;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Discrete { n: usize },
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete { .. })
    }

    /// Number of discrete actions, or the dimensionality of a box.
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete { n } => *n,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete { n }, Action::Discrete(a)) => a < n,
            (ActionSpace::Continuous { low, high }, Action::Continuous(a)) => {
                a.len() == low.len()
                    && a.iter().zip(low.iter().zip(high)).all(|(x, (lo, hi))| x.is_finite() && x >= lo && x <= hi)
            }
            _ => false,
        }
    }

    /// Projects a continuous action onto the box; discrete actions pass through.
    pub fn clip(&self, action: Action) -> Action {
        match (self, action) {
            (ActionSpace::Continuous { low, high }, Action::Continuous(a)) => Action::Continuous(
                a.iter().zip(low.iter().zip(high)).map(|(x, (lo, hi))| x.clamp(*lo, *hi)).collect(),
            ),
            (_, a) => a,
        }
    }

    /// Euclidean diameter of a box (1 for discrete spaces).
    pub fn width(&self) -> f64 {
        match self {
            ActionSpace::Discrete { .. } => 1.0,
            ActionSpace::Continuous { low, high } => {
                low.iter().zip(high).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Continuous(a) => Some(a),
            Action::Discrete(_) => None,
        }
    }
}

/// Static description of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_space: ActionSpace,
    /// Per-dimension `[v_min, v_max]` box used for trigger search.
    pub state_bounds: Vec<(f64, f64)>,
    pub max_steps: usize,
    /// Per-step reward bounds.
    pub reward_range: (f64, f64),
    /// `(worst, best)` reference episode returns used to normalise NTP.
    pub reference_returns: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    pub truncated: bool,
}

impl Transition {
    pub fn ended(&self) -> bool {
        self.done || self.truncated
    }
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode; the initial state is a pure function of `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one tick. Errors on invalid actions or when the episode has
    /// already ended.
    fn step(&mut self, action: &Action) -> Result<Transition>;

    /// Current observation.
    fn observation(&self) -> Vec<f64>;
}

/// Environment names accepted by [`make`].
pub const ENV_NAMES: [&str; 4] = ["cartpole", "mountaincar", "acrobot", "pendulum"];

pub fn make(name: &str) -> Result<Box<dyn Env>> {
    match name.to_ascii_lowercase().as_str() {
        "cartpole" | "cartpole-v1" => Ok(Box::new(CartPole::new())),
        "mountaincar" | "mountaincar-v0" => Ok(Box::new(MountainCar::new())),
        "acrobot" | "acrobot-v1" => Ok(Box::new(Acrobot::new())),
        "pendulum" | "pendulum-v1" => Ok(Box::new(Pendulum::new())),
        other => Err(Error::config("env", format!("unknown environment `{other}`"))),
    }
}

pub fn spec_for(name: &str) -> Result<EnvSpec> {
    make(name).map(|e| e.spec().clone())
}

/// Per-dimension trigger search box of an environment.
pub fn state_bounds(env: &dyn Env) -> &[(f64, f64)] {
    &env.spec().state_bounds
}

/// Episode bookkeeping shared by the environments.
#[derive(Debug, Clone, Default)]
pub(crate) struct EpisodeClock {
    pub elapsed: usize,
    pub over: bool,
}

impl EpisodeClock {
    pub fn check_running(&self) -> Result<()> {
        if self.over {
            Err(Error::Domain("step called on a finished episode; reset first".into()))
        } else {
            Ok(())
        }
    }

    /// Advances the clock and returns the truncation flag.
    pub fn tick(&mut self, done: bool, max_steps: usize) -> bool {
        self.elapsed += 1;
        let truncated = !done && self.elapsed >= max_steps;
        self.over = done || truncated;
        truncated
    }
}

pub(crate) fn expect_discrete(spec: &EnvSpec, action: &Action) -> Result<usize> {
    match action {
        Action::Discrete(a) if spec.action_space.contains(action) => Ok(*a),
        _ => Err(Error::Domain(format!("{} expects a discrete action in {:?}, got {action:?}", spec.name, spec.action_space))),
    }
}
