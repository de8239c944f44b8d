use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{run_experiment, ExperimentOutcome};
use crate::agent::csv_error;
use crate::dimension::DimensionStrategy;
use crate::error::{Error, Result};
use crate::evalkit::{MagnitudeStrategy, MetricSummary, NOISE_LEVELS};
use crate::numerics::std_dev;

/// Comparison tables reproduced at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationSuite {
    /// Adaptive freezing against fixed freezing-period ratios.
    FreezeRatio,
    /// Significance level of the freeze test.
    AlphaSweep,
    /// Top-1 / top-half / all SHAP-ranked dimensions, plus a random dimension.
    DimensionStrategy,
    /// Heuristic magnitudes against the gradient search.
    MagnitudeStrategy,
    /// Number of magnitude optimisations during implantation.
    ReoptFrequency,
    /// Inference-time Gaussian noise on triggered states.
    Noise,
}

pub const FREEZE_RATIOS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
pub const ALPHAS: [f64; 6] = [0.05, 0.06, 0.07, 0.08, 0.09, 0.10];
pub const REOPT_TIMES: [usize; 6] = [1, 10, 30, 50, 70, 100];

impl AblationSuite {
    pub const ALL: [AblationSuite; 6] = [
        AblationSuite::FreezeRatio,
        AblationSuite::AlphaSweep,
        AblationSuite::DimensionStrategy,
        AblationSuite::MagnitudeStrategy,
        AblationSuite::ReoptFrequency,
        AblationSuite::Noise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationSuite::FreezeRatio => "freeze-ratio",
            AblationSuite::AlphaSweep => "alpha-sweep",
            AblationSuite::DimensionStrategy => "dimension-strategy",
            AblationSuite::MagnitudeStrategy => "magnitude-strategy",
            AblationSuite::ReoptFrequency => "reopt-frequency",
            AblationSuite::Noise => "noise",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::config("suite", format!("unknown ablation suite `{s}`")))
    }

    /// Labelled configurations the suite runs, derived from `base`.
    pub fn variants(self, base: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |label: String, edit: &dyn Fn(&mut ExperimentConfig)| {
            let mut cfg = base.clone();
            cfg.experiment_id = format!("{}/{}/{}", base.experiment_id, self.name(), label);
            edit(&mut cfg);
            (label, cfg)
        };
        match self {
            AblationSuite::FreezeRatio => {
                let mut v: Vec<_> = FREEZE_RATIOS
                    .iter()
                    .map(|&r| with(format!("{r:.1}"), &|c| c.timing.fixed_ratio = Some(r)))
                    .collect();
                v.push(with("adaptive".into(), &|c| c.timing.fixed_ratio = None));
                v
            }
            AblationSuite::AlphaSweep => ALPHAS
                .iter()
                .map(|&a| {
                    with(format!("{a:.2}"), &|c| {
                        c.timing.fixed_ratio = None;
                        c.timing.alpha = a;
                    })
                })
                .collect(),
            AblationSuite::DimensionStrategy => [
                DimensionStrategy::ShapTop1,
                DimensionStrategy::ShapTop50,
                DimensionStrategy::All,
                DimensionStrategy::Random,
            ]
            .into_iter()
            .map(|s| {
                with(s.to_string(), &|c| {
                    c.dimension.strategy = s;
                    c.dimension.k = 1;
                })
            })
            .collect(),
            AblationSuite::MagnitudeStrategy => MagnitudeStrategy::ALL
                .into_iter()
                .map(|s| with(s.name().to_string(), &|c| c.magnitude.strategy = s))
                .collect(),
            AblationSuite::ReoptFrequency => REOPT_TIMES
                .iter()
                .map(|&n| {
                    with(n.to_string(), &|c| {
                        c.magnitude.strategy = MagnitudeStrategy::Optimized;
                        c.magnitude.reopt_times = n;
                    })
                })
                .collect(),
            AblationSuite::Noise => vec![with("noise".into(), &|c| c.eval.sigmas = NOISE_LEVELS.to_vec())],
        }
    }
}

/// One variant's aggregate, one line of the detail CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub suite: String,
    pub variant: String,
    pub env: String,
    pub algorithm: String,
    pub seeds: usize,
    pub failed: usize,
    pub ntp_mean: f64,
    pub ntp_std: f64,
    pub asr_mean: f64,
    pub asr_std: f64,
    pub bus_mean: f64,
    pub bus_std: f64,
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub suite: AblationSuite,
    /// Table in the layout of the corresponding comparison.
    pub table: PathBuf,
    /// Long-format per-variant means and stds.
    pub detail: PathBuf,
    pub rows: Vec<VariantRow>,
    pub runs: Vec<ExperimentOutcome>,
}

impl AblationOutcome {
    pub fn bus_of(&self, variant: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.variant == variant).map(|r| r.bus_mean)
    }
}

fn variant_row(suite: AblationSuite, label: &str, run: &ExperimentOutcome) -> VariantRow {
    let nan = MetricSummary { mean: f64::NAN, std: f64::NAN };
    let m = run.summary.metrics.clone();
    let get = |f: fn(&crate::evalkit::SeedSummary) -> MetricSummary| m.as_ref().map(f).unwrap_or(nan);
    let (ntp, asr, bus) = (get(|s| s.ntp), get(|s| s.asr), get(|s| s.bus));
    VariantRow {
        suite: suite.name().into(),
        variant: label.into(),
        env: run.summary.env.clone(),
        algorithm: run.summary.algorithm.clone(),
        seeds: run.summary.completed.len(),
        failed: run.summary.failed.len(),
        ntp_mean: ntp.mean,
        ntp_std: ntp.std,
        asr_mean: asr.mean,
        asr_std: asr.std,
        bus_mean: bus.mean,
        bus_std: bus.std,
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.2}")
}

/// Runs every variant of `suite` and writes `{suite}.csv` (table layout) and
/// `{suite}-detail.csv` under `{root}/{experiment-id}/`.
pub fn run_ablation(suite: AblationSuite, base: &ExperimentConfig, progress: bool) -> Result<AblationOutcome> {
    base.validate()?;
    let variants = suite.variants(base);
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (label, cfg) in &variants {
        if progress {
            println!("[ablate] {} variant {label}", suite.name());
        }
        let run = run_experiment(cfg, progress)?;
        rows.push(variant_row(suite, label, &run));
        runs.push(run);
    }
    let dir = base.output_root().join(&base.experiment_id);
    std::fs::create_dir_all(&dir)?;
    let detail = dir.join(format!("{}-detail.csv", suite.name()));
    let mut w = csv::Writer::from_path(&detail).map_err(csv_error)?;
    for r in &rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;

    let table = dir.join(format!("{}.csv", suite.name()));
    let mut w = csv::Writer::from_path(&table).map_err(csv_error)?;
    let env = base.env.clone();
    match suite {
        AblationSuite::DimensionStrategy => {
            let shown: Vec<&VariantRow> = rows.iter().filter(|r| r.variant != "random").collect();
            let mut header = vec!["environment".to_string()];
            let mut line = vec![env];
            for r in shown {
                for (m, v) in [("ntp", r.ntp_mean), ("asr", r.asr_mean), ("bus", r.bus_mean)] {
                    header.push(format!("{} {m}", r.variant));
                    line.push(fmt(v));
                }
            }
            w.write_record(&header).map_err(csv_error)?;
            w.write_record(&line).map_err(csv_error)?;
        }
        AblationSuite::Noise => {
            let summary = &runs[0].summary.noise;
            let mut header = vec!["environment".to_string()];
            let mut line = vec![env];
            let base_bus = summary.first().map(|n| n.bus.mean).unwrap_or(f64::NAN);
            for n in summary {
                header.push(format!("{:.2}", n.sigma));
                line.push(if n.sigma == 0.0 {
                    fmt(n.bus.mean)
                } else {
                    format!("{}({:+.2})", fmt(n.bus.mean), n.bus.mean - base_bus)
                });
            }
            w.write_record(&header).map_err(csv_error)?;
            w.write_record(&line).map_err(csv_error)?;
        }
        _ => {
            let with_std = matches!(suite, AblationSuite::AlphaSweep | AblationSuite::ReoptFrequency);
            let mut header = vec!["environment".to_string()];
            header.extend(rows.iter().map(|r| r.variant.clone()));
            let mut line = vec![env];
            line.extend(rows.iter().map(|r| fmt(r.bus_mean)));
            if with_std {
                header.push("std".into());
                line.push(fmt(std_dev(&rows.iter().map(|r| r.bus_mean).collect::<Vec<_>>())));
            }
            w.write_record(&header).map_err(csv_error)?;
            w.write_record(&line).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(AblationOutcome {
        suite,
        table,
        detail,
        rows,
        runs,
    })
}
