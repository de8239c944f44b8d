use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rl_backdoor::agent::Agent;
use rl_backdoor::envs;
use rl_backdoor::evalkit::{evaluate_backdoor, evaluate_noise};
use rl_backdoor::harness::{parse_config, run_ablation, run_experiment, selftest, AblationSuite, ExperimentConfig};
use rl_backdoor::magnitude::TriggerSpec;

#[derive(Parser)]
#[command(name = "rl-backdoor", version, about = "Backdoor attacks on small deep RL agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train clean agents (attack disabled).
    Train(ConfigArgs),
    /// Train with the full attack pipeline and evaluate the backdoor.
    Attack(ConfigArgs),
    /// Evaluate a saved checkpoint and trigger.
    Eval(EvalArgs),
    /// Run an ablation suite: freeze-ratio, alpha-sweep, dimension-strategy,
    /// magnitude-strategy, reopt-frequency or noise.
    Ablate {
        suite: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the oracle self-checks.
    Selftest,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// TOML experiment file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root (default: $RL_BACKDOOR_OUT, then ./runs).
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
    #[arg(long = "experiment-id")]
    experiment_id: Option<String>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// trainer.total_timesteps
    #[arg(long = "total-timesteps")]
    total_timesteps: Option<u64>,
    /// timing.alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// timing.fixed_ratio
    #[arg(long = "fixed-ratio")]
    fixed_ratio: Option<f64>,
    /// dimension.strategy
    #[arg(long = "dimension-strategy")]
    dimension_strategy: Option<String>,
    /// dimension.k
    #[arg(long)]
    k: Option<usize>,
    /// magnitude.strategy
    #[arg(long = "magnitude-strategy")]
    magnitude_strategy: Option<String>,
    /// magnitude.reopt_times
    #[arg(long = "reopt-times")]
    reopt_times: Option<usize>,
    /// Any other key, e.g. `--set implant.p_tamper=3`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Suppress progress lines.
    #[arg(long)]
    quiet: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push(format!("{k}={v}"));
            }
        };
        let quote = |s: &String| format!("{s:?}");
        push("output_dir", self.output_dir.as_ref().map(|p| format!("{:?}", p.display().to_string())));
        push("experiment_id", self.experiment_id.as_ref().map(quote));
        push("env", self.env.as_ref().map(quote));
        push("algo", self.algo.as_ref().map(quote));
        push("workers", self.workers.map(|v| v.to_string()));
        push("trainer.total_timesteps", self.total_timesteps.map(|v| v.to_string()));
        push("timing.alpha", self.alpha.map(|v| format!("{v:?}")));
        push("timing.fixed_ratio", self.fixed_ratio.map(|v| format!("{v:?}")));
        push("dimension.strategy", self.dimension_strategy.as_ref().map(quote));
        push("dimension.k", self.k.map(|v| v.to_string()));
        push("magnitude.strategy", self.magnitude_strategy.as_ref().map(quote));
        push("magnitude.reopt_times", self.reopt_times.map(|v| v.to_string()));
        if !self.seeds.is_empty() {
            o.push(format!("seeds={:?}", self.seeds));
        }
        o.extend(self.set.iter().cloned());
        o
    }

    fn load(&self) -> rl_backdoor::Result<ExperimentConfig> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        parse_config(&text, &self.overrides())
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Seed directory written by `attack` (holds agent.ckpt and trigger.json).
    #[arg(long = "run-dir")]
    run_dir: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    trigger: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    config: ConfigArgs,
}

fn run(cli: Cli) -> rl_backdoor::Result<bool> {
    match cli.command {
        Command::Train(args) => experiment(&args, false),
        Command::Attack(args) => experiment(&args, true),
        Command::Ablate { suite, config } => {
            let suite = AblationSuite::parse(&suite)?;
            let cfg = config.load()?;
            let out = run_ablation(suite, &cfg, !config.quiet)?;
            println!("{}", std::fs::read_to_string(&out.table)?);
            println!("table: {}\ndetail: {}", out.table.display(), out.detail.display());
            Ok(out.rows.iter().all(|r| r.failed == 0))
        }
        Command::Eval(args) => {
            let mut cfg_args = args.config.clone();
            let (ckpt, trig) = match &args.run_dir {
                Some(d) => {
                    if cfg_args.config.is_none() && d.join("../config.toml").exists() {
                        cfg_args.config = Some(d.join("../config.toml"));
                    }
                    (d.join("agent.ckpt"), d.join("trigger.json"))
                }
                None => (
                    args.checkpoint.clone().ok_or_else(|| rl_backdoor::Error::config("checkpoint", "needs --run-dir or --checkpoint"))?,
                    args.trigger.clone().ok_or_else(|| rl_backdoor::Error::config("trigger", "needs --run-dir or --trigger"))?,
                ),
            };
            let cfg = cfg_args.load()?;
            let mut env = envs::make(&cfg.env)?;
            let agent = Agent::load(&ckpt, env.spec(), cfg.trainer.squash)?;
            let trigger = TriggerSpec::load(&trig)?;
            let eps = cfg.implant.eps_action_for(&env.spec().action_space);
            let report = evaluate_backdoor(env.as_mut(), &agent.policy, &trigger, eps, &cfg.eval, args.seed)?;
            let noise = evaluate_noise(env.as_mut(), &agent.policy, &trigger, eps, report.ntp, &cfg.eval, args.seed)?;
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "report": report, "noise": noise }))?);
            Ok(true)
        }
        Command::Selftest => {
            let checks = selftest()?;
            for c in &checks {
                println!(
                    "{} {:<20} worst {:.3e} (tolerance {:.0e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn experiment(args: &ConfigArgs, attack: bool) -> rl_backdoor::Result<bool> {
    let mut overrides = args.clone();
    overrides.set.push(format!("implant.enabled={attack}"));
    let cfg = overrides.load()?;
    let out = run_experiment(&cfg, !args.quiet)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    println!("run directory: {}", out.dir.display());
    Ok(out.all_completed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
