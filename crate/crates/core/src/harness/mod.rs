//! Experiment configuration, multi-seed orchestration, ablation suites and
//! oracle self-checks.

mod ablation;
mod config;
mod run;
mod selftest;

pub use ablation::{run_ablation, AblationOutcome, AblationSuite, VariantRow, ALPHAS, FREEZE_RATIOS, REOPT_TIMES};
pub use config::{apply_override, default_output_root, parse_config, ExperimentConfig, OUTPUT_ENV};
pub use run::{run_experiment, run_seed, ExperimentOutcome, ExperimentSummary, FailedSeed, NoiseSummary, SeedReport};
pub use selftest::{selftest, sign_flip_p, subset_shapley, SelfCheck};
