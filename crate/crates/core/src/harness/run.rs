use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::agent::csv_error;
use crate::envs;
use crate::error::{Result, Stage};
use crate::evalkit::{aggregate, evaluate_backdoor, evaluate_noise, EvalReport, MetricSummary, NoiseRow, ResultRow, SeedSummary};
use crate::implant::{run_attack, AttackOutcome};
use crate::magnitude::TriggerSpec;

/// Per-seed evaluation written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub report: EvalReport,
    pub noise: Vec<NoiseRow>,
    pub unfreeze_step: Option<u64>,
    pub trigger: Option<TriggerSpec>,
    pub final_attack_interval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub sigma: f64,
    pub asr: MetricSummary,
    pub bus: MetricSummary,
}

/// Aggregate over seeds, written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment_id: String,
    pub env: String,
    pub algorithm: String,
    pub completed: Vec<u64>,
    pub failed: Vec<FailedSeed>,
    /// Percent; `None` when no seed completed.
    pub metrics: Option<SeedSummary>,
    pub noise: Vec<NoiseSummary>,
    pub unfreeze_steps: Vec<Option<u64>>,
}

/// What [`run_experiment`] returns besides the files it writes.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub reports: Vec<SeedReport>,
    pub summary: ExperimentSummary,
}

impl ExperimentOutcome {
    pub fn all_completed(&self) -> bool {
        self.summary.failed.is_empty()
    }
}

fn tags(cfg: &ExperimentConfig) -> String {
    let timing = match cfg.timing.fixed_ratio {
        Some(r) => format!("ratio:{r}"),
        None => format!("alpha:{}", cfg.timing.alpha),
    };
    format!(
        "attack={};freeze={timing};dim={};k={};mag={};reopt={}",
        cfg.implant.enabled,
        cfg.dimension.strategy,
        cfg.dimension.k,
        cfg.magnitude.strategy.name(),
        cfg.magnitude.reopt_times
    )
}

/// Trains, evaluates and persists one seed into `dir`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, dir: &Path, progress: bool) -> Result<SeedReport> {
    std::fs::create_dir_all(dir)?;
    let out = run_attack(&cfg.env, cfg.algo, &cfg.trainer, &cfg.attack(), seed, progress)?;
    write_training_artifacts(&out, dir)?;
    let report = evaluate_outcome(cfg, &out, seed).map_err(|e| e.at(Stage::Evaluate))?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn write_training_artifacts(out: &AttackOutcome, dir: &Path) -> Result<()> {
    out.agent.save(&dir.join("agent.ckpt"))?;
    out.log.save(&dir.join("train.csv"))?;
    if let Some(t) = &out.trigger {
        t.save(&dir.join("trigger.json"))?;
    }
    if out.trigger_history.len() > 1 {
        std::fs::write(dir.join("trigger_history.json"), serde_json::to_string_pretty(&out.trigger_history)?)?;
    }
    if let Some(a) = &out.attribution {
        a.write_csv(BufWriter::new(File::create(dir.join("attribution.csv"))?))?;
    }
    if !out.freeze_scores.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("freeze.csv")).map_err(csv_error)?;
        w.write_record(["eval_index", "score", "p_value"]).map_err(csv_error)?;
        for (i, score) in out.freeze_scores.iter().enumerate() {
            let p = out
                .p_trail
                .iter()
                .find(|t| t.eval_index == i + 1)
                .map(|t| t.p_value.to_string())
                .unwrap_or_default();
            w.write_record([(i + 1).to_string(), score.to_string(), p]).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn evaluate_outcome(cfg: &ExperimentConfig, out: &AttackOutcome, seed: u64) -> Result<SeedReport> {
    let mut env = envs::make(&cfg.env)?;
    let eps = cfg.implant.eps_action_for(&env.spec().action_space);
    let (report, noise) = match &out.trigger {
        Some(trigger) => {
            let report = evaluate_backdoor(env.as_mut(), &out.agent.policy, trigger, eps, &cfg.eval, seed)?;
            let noise = evaluate_noise(env.as_mut(), &out.agent.policy, trigger, eps, report.ntp, &cfg.eval, seed)?;
            (report, noise)
        }
        None => {
            let (p_l, p_u) = cfg.eval.bounds(env.as_ref());
            let mut actor = crate::evalkit::DeterministicActor(&out.agent.policy);
            let (ntp, returns) = crate::evalkit::eval_ntp(env.as_mut(), &mut actor, cfg.eval.n_eval, p_u, p_l, seed)?;
            let report = EvalReport {
                ntp,
                asr: 0.0,
                bus: 0.0,
                returns,
                n_activations: 0,
                hits: 0,
                p_u,
                p_l,
                seed,
                sigma: 0.0,
            };
            (report, Vec::new())
        }
    };
    Ok(SeedReport {
        seed,
        report,
        noise,
        unfreeze_step: out.unfreeze_step,
        trigger: out.trigger.clone(),
        final_attack_interval: out.schedule.as_ref().map(|s| s.si_attack),
    })
}

fn result_rows(cfg: &ExperimentConfig, r: &SeedReport) -> Vec<ResultRow> {
    let tags = tags(cfg);
    let mut rows = vec![ResultRow::from_report(&cfg.experiment_id, &cfg.env, cfg.algo.name(), &tags, &r.report)];
    for n in r.noise.iter().filter(|n| n.sigma > 0.0) {
        rows.push(ResultRow {
            sigma: n.sigma,
            asr: 100.0 * n.asr,
            bus: 100.0 * n.bus,
            ..rows[0].clone()
        });
    }
    rows
}

fn worker_count(cfg: &ExperimentConfig) -> usize {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let w = if cfg.workers == 0 { avail } else { cfg.workers };
    w.clamp(1, cfg.seeds.len())
}

/// Runs every seed of `cfg` (concurrently when `workers > 1`), then writes
/// `config.toml`, `results.csv` and `summary.json` next to the per-seed
/// directories. A failing seed is recorded and the others continue.
pub fn run_experiment(cfg: &ExperimentConfig, progress: bool) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let dir = cfg.run_dir();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        for _ in 0..worker_count(cfg) {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&seed) = cfg.seeds.get(i) else { break };
                if progress {
                    println!("[harness] {} {}-{} seed {seed}", cfg.experiment_id, cfg.env, cfg.algo.name());
                }
                let res = run_seed(cfg, seed, &cfg.seed_dir(seed), progress);
                if tx.send((i, seed, res)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut results: Vec<_> = rx.into_iter().collect();
    results.sort_by_key(|(i, _, _)| *i);

    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for (_, seed, res) in results {
        match res {
            Ok(r) => reports.push(r),
            Err(e) => {
                if progress {
                    println!("[harness] seed {seed} failed: {e}");
                }
                failed.push(FailedSeed { seed, error: e.to_string() });
            }
        }
    }

    let results_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&results_path).map_err(csv_error)?;
    let mut main_rows = Vec::new();
    for r in &reports {
        let rows = result_rows(cfg, r);
        main_rows.push(rows[0].clone());
        for row in &rows {
            w.serialize(row).map_err(csv_error)?;
        }
    }
    w.flush()?;

    let summary = ExperimentSummary {
        experiment_id: cfg.experiment_id.clone(),
        env: cfg.env.clone(),
        algorithm: cfg.algo.name().to_string(),
        completed: reports.iter().map(|r| r.seed).collect(),
        failed,
        metrics: (!main_rows.is_empty()).then(|| aggregate(&main_rows)),
        noise: noise_summary(&reports),
        unfreeze_steps: reports.iter().map(|r| r.unfreeze_step).collect(),
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(ExperimentOutcome { dir, reports, summary })
}

fn noise_summary(reports: &[SeedReport]) -> Vec<NoiseSummary> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    first
        .noise
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let col = |f: fn(&NoiseRow) -> f64| reports.iter().filter_map(|r| r.noise.get(i)).map(|n| 100.0 * f(n)).collect::<Vec<_>>();
            NoiseSummary {
                sigma: row.sigma,
                asr: MetricSummary::of(&col(|n| n.asr)),
                bus: MetricSummary::of(&col(|n| n.bus)),
            }
        })
        .collect()
}
