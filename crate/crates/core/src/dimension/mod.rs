//! Trigger-dimension selection by kernel-SHAP attribution of the policy
//! output.

mod shap;
mod strategy;

pub use shap::{
    background_mean, build_perturbed_state, estimate_shap, explain, explain_policy, explained_output,
    global_importance, rank_dimensions, select_trigger_dimensions, shapley_kernel_weight, Attribution, ExplainTarget,
    KernelShapConfig, LocalShap,
};
pub use strategy::{DimensionConfig, DimensionStrategy};
