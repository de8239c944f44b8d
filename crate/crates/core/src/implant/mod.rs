//! Backdoor implantation during training: trigger injection, attack
//! interval adaptation, action overrides and reward poisoning, plus the
//! end-to-end attack pipeline built on the trainer hooks.

mod pipeline;
mod schedule;

pub use crate::magnitude::inject_trigger;
pub use pipeline::{build_trigger, run_attack, AttackConfig, AttackOutcome, BackdoorHooks};
pub use schedule::{default_target, poisoned_reward_value, AttackSchedule, ImplantConfig};
