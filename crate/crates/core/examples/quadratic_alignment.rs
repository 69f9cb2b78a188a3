//! Train a Gaussian policy on the five-step quadratic toy task.
//!
//! cargo run --release --example quadratic_alignment

use verbalign::ddpo::{block_means, run, RunConfig};

fn main() {
    let mut config = RunConfig::default();
    config.trainer.max_updates = 600;
    config.trainer.learning_rate = 0.01;
    let outcome = run(&config, None).expect("training runs");
    for (i, (mean, se)) in block_means(&outcome.mean_rewards(), 100).iter().enumerate() {
        println!("updates {:>3}-{:>3}: mean reward {mean:+.4} (se {se:.4})", i * 100, i * 100 + 99);
    }
    println!("\ncheckpoint:\n{}", outcome.policy.to_checkpoint());
}
