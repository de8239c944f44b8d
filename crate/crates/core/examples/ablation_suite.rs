//! Runs one ablation suite at a reduced budget and prints its comparison
//! table.
//!
//! ```text
//! cargo run --release --example ablation_suite -- magnitude-strategy 60000
//! ```

use rl_backdoor::agent::Algorithm;
use rl_backdoor::harness::{run_ablation, AblationSuite, ExperimentConfig};

fn main() -> rl_backdoor::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let suite = AblationSuite::parse(args.first().map(String::as_str).unwrap_or("magnitude-strategy"))?;
    let steps: u64 = args.get(1).map(|s| s.parse().expect("timesteps must be an integer")).unwrap_or(60_000);

    let mut cfg = ExperimentConfig::defaults("cartpole", Algorithm::Ppo);
    cfg.experiment_id = "ablation-demo".into();
    cfg.output_dir = Some(std::env::temp_dir().join("rl-backdoor-ablation"));
    cfg.seeds = vec![0];
    cfg.trainer.total_timesteps = steps;
    // a short budget leaves too few evaluations for the adaptive rule
    cfg.timing.eval_interval = steps / 40;
    let out = run_ablation(suite, &cfg, false)?;
    for r in &out.rows {
        println!(
            "{:<12} NTP {:6.2} ASR {:6.2} BUS {:6.2}",
            r.variant, r.ntp_mean, r.asr_mean, r.bus_mean
        );
    }
    println!("\n{}", std::fs::read_to_string(&out.table)?);
    println!("table {}\ndetail {}", out.table.display(), out.detail.display());
    Ok(())
}
