//! Backdoor-attack laboratory for small deep reinforcement learning agents.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense matrices, tanh MLPs with hand-written backprop, Adam, seeded RNG streams
//! - [`envs`]: CartPole, MountainCar, Acrobot and Pendulum with trigger search boxes
//! - [`agent`]: categorical / Gaussian policies, value functions, PPO and A2C trainers
//! - [`timing`]: exact Wilcoxon signed-rank test and the adaptive freeze monitor
//! - [`dimension`]: kernel-SHAP attribution and top-K trigger dimension selection
//! - [`magnitude`]: momentum gradient search for trigger values inside their boxes
//! - [`implant`]: trigger injection, attack-interval adaptation, action and reward poisoning
//! - [`evalkit`]: NTP / ASR / BUS metrics, noise sweeps, heuristic magnitude baselines
//! - [`harness`]: TOML experiment configs, multi-seed runs, ablation suites
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod agent;
pub mod dimension;
pub mod envs;
pub mod error;
pub mod evalkit;
pub mod harness;
pub mod implant;
pub mod magnitude;
pub mod numerics;
pub mod timing;

pub use error::{Error, Result};
