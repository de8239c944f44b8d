//! Injection timing: when to stop training trigger-free and start poisoning.

mod config;
mod monitor;
mod wilcoxon;

pub use config::{EvalMode, TimingConfig};
pub use monitor::{fixed_ratio_monitor, Decision, FreezeMonitor, FreezeSchedule, WindowTest};
pub use wilcoxon::{signed_ranks, wilcoxon_signed_rank, EXACT_MAX_N};
