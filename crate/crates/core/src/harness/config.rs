use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::agent::{Algorithm, TrainerConfig};
use crate::dimension::DimensionConfig;
use crate::envs;
use crate::error::{Error, Result};
use crate::evalkit::EvalConfig;
use crate::implant::{AttackConfig, ImplantConfig};
use crate::magnitude::MagnitudeConfig;
use crate::timing::TimingConfig;

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "RL_BACKDOOR_OUT";
const DEFAULT_OUTPUT: &str = "runs";

/// One experiment: an environment, an algorithm, a seed list and every
/// stage setting. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Names the run directory under the output root.
    pub experiment_id: String,
    pub env: String,
    pub algo: Algorithm,
    pub seeds: Vec<u64>,
    /// Seeds trained concurrently; 0 uses every available core.
    pub workers: usize,
    /// Output root; falls back to `$RL_BACKDOOR_OUT`, then `runs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub trainer: TrainerConfig,
    pub timing: TimingConfig,
    pub dimension: DimensionConfig,
    pub magnitude: MagnitudeConfig,
    pub implant: ImplantConfig,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    /// Documented defaults for an environment / algorithm pair.
    pub fn defaults(env: &str, algo: Algorithm) -> Self {
        Self {
            experiment_id: "default".into(),
            env: env.to_string(),
            algo,
            seeds: (0..5).collect(),
            workers: 1,
            output_dir: None,
            trainer: TrainerConfig::preset(algo, env),
            timing: TimingConfig::default(),
            dimension: DimensionConfig::default(),
            magnitude: MagnitudeConfig::default(),
            implant: ImplantConfig::default(),
            eval: EvalConfig::default(),
        }
    }

    pub fn attack(&self) -> AttackConfig {
        AttackConfig {
            timing: self.timing.clone(),
            dimension: self.dimension.clone(),
            magnitude: self.magnitude.clone(),
            implant: self.implant.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment_id.is_empty() || self.experiment_id.contains("..") || self.experiment_id.starts_with('/') {
            return Err(Error::config("experiment_id", "must be a non-empty relative name"));
        }
        let spec = envs::spec_for(&self.env).map_err(|_| {
            Error::config("env", format!("unknown environment `{}` (expected one of {:?})", self.env, envs::ENV_NAMES))
        })?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        self.trainer.validate()?;
        self.attack().validate_for(&spec)?;
        self.eval.validate()
    }

    pub fn output_root(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(default_output_root)
    }

    /// `{root}/{experiment-id}/{env}-{algo}`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_root()
            .join(&self.experiment_id)
            .join(format!("{}-{}", self.env, self.algo.name()))
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.run_dir().join(format!("seed-{seed}"))
    }

    /// Effective configuration as TOML, every parameter spelled out.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        parse_config(text, &[])
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text, overrides)
    }
}

pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// Parses TOML text, applies `section.key=value` overrides (later ones win,
/// and all of them beat the file), fills the per-environment defaults and
/// validates the result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut user: Table = text.parse().map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;
    for o in overrides {
        apply_override(&mut user, o)?;
    }
    let env = match user.get("env") {
        None => "cartpole".to_string(),
        Some(Value::String(s)) => s.to_ascii_lowercase(),
        Some(_) => return Err(Error::config("env", "must be a string")),
    };
    let algo = match user.get("algo") {
        None => Algorithm::Ppo,
        Some(Value::String(s)) => Algorithm::parse(s)?,
        Some(_) => return Err(Error::config("algo", "must be a string")),
    };
    let mut merged = Value::try_from(ExperimentConfig::defaults(&env, algo)).map_err(|e| Error::config("config", e.to_string()))?;
    if let Value::Table(base) = &mut merged {
        merge(base, user);
        base.insert("env".into(), Value::String(env));
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { "config".to_string() } else { field };
        Error::config(field, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &mut Table, user: Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a bare
/// string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like section.key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty key segment"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(Error::config(key, format!("`{part}` is not a section"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("env = \"cartpole\"\nalgo = \"ppo\"\n", &[]).unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults("cartpole", Algorithm::Ppo));
    }

    #[test]
    fn env_preset_feeds_defaults() {
        let cfg = parse_config("env = \"pendulum\"", &[]).unwrap();
        assert_eq!(cfg.trainer, TrainerConfig::preset(Algorithm::Ppo, "pendulum"));
        assert_eq!(cfg.trainer.total_timesteps, 300_000);
    }

    #[test]
    fn section_values_override_defaults() {
        let cfg = parse_config("[timing]\nalpha = 0.07\n[trainer]\ntotal_timesteps = 1000\n", &[]).unwrap();
        assert_eq!(cfg.timing.alpha, 0.07);
        assert_eq!(cfg.timing.window, 5);
        assert_eq!(cfg.trainer.total_timesteps, 1000);
    }

    #[test]
    fn invalid_alpha_names_field() {
        let e = parse_config("[timing]\nalpha = 1.5\n", &[]).unwrap_err();
        assert_eq!(field_of(e), "timing.alpha");
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let e = parse_config("[timing]\nalpah = 0.1\n", &[]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("alpah"), "{msg}");
        assert_eq!(field_of(e), "timing.alpah");
        assert!(parse_config("bogus = 1", &[]).is_err());
    }

    #[test]
    fn type_mismatch_names_field() {
        let e = parse_config("[trainer]\nn_steps = \"many\"\n", &[]).unwrap_err();
        assert_eq!(field_of(e), "trainer.n_steps");
    }

    #[test]
    fn cli_override_supersedes_file() {
        let cfg = parse_config(
            "seeds = [7, 8]\n[dimension]\nstrategy = \"all\"\n",
            &["seeds=[1,2,3]".into(), "dimension.strategy=random".into(), "magnitude.strategy=mid".into()],
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.dimension.strategy.to_string(), "random");
        assert_eq!(cfg.magnitude.strategy.name(), "mid");
    }

    #[test]
    fn effective_config_round_trips() {
        let mut cfg = ExperimentConfig::defaults("pendulum", Algorithm::A2c);
        cfg.timing.fixed_ratio = Some(0.3);
        cfg.output_dir = Some(PathBuf::from("/tmp/x"));
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_env_and_duplicate_seeds_rejected() {
        assert_eq!(field_of(parse_config("env = \"hopper\"", &[]).unwrap_err()), "env");
        assert_eq!(field_of(parse_config("seeds = [1, 1]", &[]).unwrap_err()), "seeds");
        assert_eq!(field_of(parse_config("seeds = []", &[]).unwrap_err()), "seeds");
    }

    #[test]
    fn layout_follows_naming_scheme() {
        let mut cfg = ExperimentConfig::defaults("cartpole", Algorithm::Ppo);
        cfg.experiment_id = "exp1".into();
        cfg.output_dir = Some(PathBuf::from("/out"));
        assert_eq!(cfg.seed_dir(3), PathBuf::from("/out/exp1/cartpole-ppo/seed-3"));
    }
}
