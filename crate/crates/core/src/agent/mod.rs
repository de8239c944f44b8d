//! Policies, critics, rollout storage and the PPO / A2C trainers.
//!
//! Attacks reach into training only through [`ImplantHooks`]; with
//! [`NoHooks`] the trainers run the clean algorithm.

mod buffer;
mod config;
mod hooks;
mod log;
mod policy;
mod trainer;
mod value;

pub use buffer::{gae, EpisodeEnd, RolloutBuffer, Step};
pub use config::{Algorithm, LrSchedule, TrainerConfig};
pub use hooks::{HookStatus, ImplantHooks, NoHooks};
pub use log::{LogRow, TrainingLog};
pub(crate) use log::csv_error;
pub use policy::{argmax, log_softmax, softmax, Policy, PolicyEval, PolicyHead, RawAction, SampledAction, Squash};
pub use trainer::{
    clipped_surrogate, evaluate_returns, run_episode, train, train_a2c, train_ppo, ActionMode, Agent, TrainOutcome,
    UpdateStats,
};
pub use value::ValueFn;
