//! Attack metrics (NTP, ASR, BUS), inference-time noise sweeps and the
//! heuristic magnitude baselines used in ablations.

mod heuristic;
mod metrics;
mod report;

pub use heuristic::{heuristic_magnitude, MagnitudeStrategy};
pub use metrics::{
    action_hits, bus, eval_asr, eval_ntp, noise_sweep, normalized_return, ntp_from_returns, Actor, AsrConfig, AsrOutcome,
    DeterministicActor, NoiseRow, NOISE_LEVELS,
};
pub use report::{aggregate, evaluate_backdoor, evaluate_noise, EvalConfig, EvalReport, MetricSummary, ResultRow, ResultsWriter, SeedSummary};
