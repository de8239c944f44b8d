use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{bus, eval_asr, eval_ntp, noise_sweep, AsrConfig, DeterministicActor, NoiseRow, NOISE_LEVELS};
use crate::agent::{csv_error, Policy};
use crate::envs::Env;
use crate::error::{Error, Result};
use crate::magnitude::TriggerSpec;
use crate::numerics::{mean, std_dev};

/// Post-training evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Clean episodes behind the NTP.
    pub n_eval: usize,
    /// Trigger activations behind the ASR.
    pub n_activations: usize,
    /// Episodes the activations are spread over.
    pub n_episodes: usize,
    /// Steps between activations within an episode.
    pub interval: usize,
    /// Noise levels of the robustness sweep.
    pub sigmas: Vec<f64>,
    /// Overrides the environment's normalisation bounds `(P_l, P_u)`.
    pub reference_returns: Option<(f64, f64)>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_eval: 10,
            n_activations: 100,
            n_episodes: 10,
            interval: 20,
            sigmas: NOISE_LEVELS.to_vec(),
            reference_returns: None,
        }
    }
}

impl EvalConfig {
    pub fn asr(&self, sigma: f64) -> AsrConfig {
        AsrConfig {
            n_activations: self.n_activations,
            n_episodes: self.n_episodes,
            interval: self.interval,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_eval == 0 {
            return Err(Error::config("eval.n_eval", "must be at least 1"));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::config("eval.sigmas", "noise levels must be finite and non-negative"));
        }
        if let Some((lo, hi)) = self.reference_returns {
            if !(hi > lo) {
                return Err(Error::config("eval.reference_returns", "needs P_l < P_u"));
            }
        }
        self.asr(0.0).validate()
    }

    /// `(P_l, P_u)` for an environment.
    pub fn bounds(&self, env: &dyn Env) -> (f64, f64) {
        self.reference_returns.unwrap_or(env.spec().reference_returns)
    }
}

/// Clean NTP plus triggered ASR of a policy, with the deterministic actor.
pub fn evaluate_backdoor(
    env: &mut dyn Env,
    policy: &Policy,
    trigger: &TriggerSpec,
    eps_action: f64,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<EvalReport> {
    cfg.validate()?;
    let (p_l, p_u) = cfg.bounds(env);
    let mut actor = DeterministicActor(policy);
    let (ntp, returns) = eval_ntp(env, &mut actor, cfg.n_eval, p_u, p_l, seed)?;
    let out = eval_asr(env, &mut actor, trigger, eps_action, &cfg.asr(0.0), seed)?;
    Ok(EvalReport {
        ntp,
        asr: out.asr,
        bus: bus(ntp, out.asr),
        returns,
        n_activations: out.activations,
        hits: out.hits,
        p_u,
        p_l,
        seed,
        sigma: 0.0,
    })
}

/// Noise sweep of a policy over `cfg.sigmas`, reusing a measured NTP.
pub fn evaluate_noise(
    env: &mut dyn Env,
    policy: &Policy,
    trigger: &TriggerSpec,
    eps_action: f64,
    ntp: f64,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    cfg.validate()?;
    let mut actor = DeterministicActor(policy);
    noise_sweep(env, &mut actor, trigger, eps_action, ntp, &cfg.sigmas, &cfg.asr(0.0), seed)
}

/// Metrics of one evaluated agent. NTP/ASR/BUS are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ntp: f64,
    pub asr: f64,
    pub bus: f64,
    /// Clean evaluation returns behind the NTP.
    pub returns: Vec<f64>,
    pub n_activations: usize,
    pub hits: usize,
    pub p_u: f64,
    pub p_l: f64,
    pub seed: u64,
    pub sigma: f64,
}

/// One line of a results CSV. Metrics are reported in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub seed: u64,
    pub env: String,
    pub algorithm: String,
    /// `key=value` pairs joined with `;`, e.g. `dim=shap;mag=optimized`.
    pub tags: String,
    pub sigma: f64,
    pub ntp: f64,
    pub asr: f64,
    pub bus: f64,
}

impl ResultRow {
    pub fn from_report(experiment_id: &str, env: &str, algorithm: &str, tags: &str, report: &EvalReport) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            seed: report.seed,
            env: env.to_string(),
            algorithm: algorithm.to_string(),
            tags: tags.to_string(),
            sigma: report.sigma,
            ntp: 100.0 * report.ntp,
            asr: 100.0 * report.asr,
            bus: 100.0 * report.bus,
        }
    }
}

/// Appends rows to a results CSV, writing the header when the file is new.
#[derive(Debug, Clone)]
pub struct ResultsWriter {
    path: PathBuf,
}

impl ResultsWriter {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, rows: &[ResultRow]) -> Result<()> {
        let fresh = !self.path.exists() || std::fs::metadata(&self.path)?.len() == 0;
        let file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        for row in rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Vec<ResultRow>> {
        let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
        r.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation across seeds.
    pub std: f64,
}

impl MetricSummary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            std: std_dev(xs),
        }
    }
}

/// Mean and std of NTP / ASR / BUS (percent) across rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seeds: Vec<u64>,
    pub ntp: MetricSummary,
    pub asr: MetricSummary,
    pub bus: MetricSummary,
}

pub fn aggregate(rows: &[ResultRow]) -> SeedSummary {
    let col = |f: fn(&ResultRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    SeedSummary {
        seeds: rows.iter().map(|r| r.seed).collect(),
        ntp: MetricSummary::of(&col(|r| r.ntp)),
        asr: MetricSummary::of(&col(|r| r.asr)),
        bus: MetricSummary::of(&col(|r| r.bus)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, bus: f64) -> ResultRow {
        ResultRow {
            experiment_id: "x".into(),
            seed,
            env: "cartpole".into(),
            algorithm: "ppo".into(),
            tags: "dim=shap".into(),
            sigma: 0.0,
            ntp: bus,
            asr: bus,
            bus,
        }
    }

    #[test]
    fn append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let w = ResultsWriter::new(dir.path().join("results.csv"));
        w.append(&[row(0, 90.0)]).unwrap();
        w.append(&[row(1, 80.0)]).unwrap();
        let text = std::fs::read_to_string(w.path()).unwrap();
        assert_eq!(text.matches("experiment_id").count(), 1);
        assert_eq!(ResultsWriter::read(w.path()).unwrap(), vec![row(0, 90.0), row(1, 80.0)]);
    }

    #[test]
    fn aggregates() {
        let s = aggregate(&[row(0, 90.0), row(1, 80.0)]);
        assert_eq!(s.bus.mean, 85.0);
        assert_eq!(s.bus.std, 5.0);
        assert_eq!(s.seeds, vec![0, 1]);
    }
}
