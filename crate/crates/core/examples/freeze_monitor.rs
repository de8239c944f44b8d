//! The adaptive freezing rule on a synthetic learning curve: scores rise,
//! then plateau with noise, and the monitor unfreezes once two consecutive
//! windows are no longer significantly different.
//!
//! ```text
//! cargo run --release --example freeze_monitor
//! ```

use rl_backdoor::numerics::Rng;
use rl_backdoor::timing::{fixed_ratio_monitor, wilcoxon_signed_rank, Decision, FreezeMonitor};

fn main() -> rl_backdoor::Result<()> {
    println!("all-positive differences, n = 8: p = {}", wilcoxon_signed_rank(&[0.0; 8], &[1., 2., 3., 4., 5., 6., 7., 8.])?);

    let mut rng = Rng::new(3);
    let curve = |i: usize, rng: &mut Rng| 500.0 * (1.0 - (-(i as f64) / 12.0).exp()) + 15.0 * rng.normal();
    for (k, alpha) in [(5, 0.05), (8, 0.05), (8, 0.10)] {
        let mut monitor = FreezeMonitor::adaptive(5000, k, alpha);
        let mut step = 0;
        for i in 1..=200 {
            step = i as u64 * 5000;
            if monitor.record_eval(step, curve(i, &mut rng)) == Decision::Unfreeze {
                break;
            }
        }
        let trail: Vec<String> = monitor
            .p_trail()
            .iter()
            .map(|w| format!("eval {}: p={:.4}", w.eval_index, w.p_value))
            .collect();
        println!("k={k} alpha={alpha}: unfreeze at step {step}\n  {}", trail.join("\n  "));
    }

    let mut fixed = fixed_ratio_monitor(0.3, 200_000, 5000);
    let at = (1..=200_000u64).find(|&t| fixed.check_step(t) == Decision::Unfreeze);
    println!("fixed ratio 0.3 of 200k: unfreeze at step {at:?}");
    Ok(())
}
