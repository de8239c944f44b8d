//! Gradient search for trigger values: drive the policy toward the target
//! action by moving one state coordinate inside its valid box.

mod optimize;
mod trigger;

pub use optimize::{
    optimize_magnitude, optimize_trigger, reoptimization_points, trigger_loss, trigger_loss_grad, trigger_value_grad,
    MagnitudeConfig, MagnitudeTrace, StepSchedule,
};
pub use trigger::{inject_trigger, TriggerSpec};
