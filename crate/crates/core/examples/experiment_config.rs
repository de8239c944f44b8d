//! Parses an experiment file with command-line style overrides and prints the
//! effective configuration, or the field a bad value is rejected for.
//!
//! ```text
//! cargo run --release --example experiment_config -- configs/cartpole_ppo.toml timing.alpha=0.07
//! ```

use rl_backdoor::harness::{parse_config, ExperimentConfig};

fn main() -> rl_backdoor::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let text = match args.first() {
        Some(path) => std::fs::read_to_string(path)?,
        None => "env = \"pendulum\"\nseeds = [0, 1, 2]\n".to_string(),
    };
    let cfg: ExperimentConfig = parse_config(&text, args.get(1..).unwrap_or(&[]))?;
    println!("# run directory: {}\n{}", cfg.run_dir().display(), cfg.to_toml()?);

    for bad in ["timing.alpha=1.5", "trainer.n_steps=\"many\"", "dimension.strategy=\"top3\"", "magnitude.nopt=5"] {
        match parse_config(&text, &[bad.to_string()]) {
            Ok(_) => println!("{bad}: accepted"),
            Err(e) => println!("{bad}: {e}"),
        }
    }
    Ok(())
}
