//! Steer a toy generator toward one color using only a language-model reward.
//!
//! cargo run --release --example verbal_alignment

use verbalign::ddpo::{
    color_frequency, run, ColorFeaturizer, RunConfig,
};
use verbalign::verbalization::ColorName;

fn main() {
    let target = ColorName::Magenta;
    let config = RunConfig::verbal(target);
    let before = config.initial_policy().unwrap();
    let outcome = run(&config, None).expect("training runs");

    let featurizer = ColorFeaturizer::default();
    let share = |p| color_frequency(&config.mdp, p, &featurizer, target, 2000, 99);
    println!("{} before: {:.3}", target.as_str(), share(&before));
    println!("{} after : {:.3}", target.as_str(), share(&outcome.policy));
    let curve = outcome.mean_rewards();
    println!("mean reward {:.3} -> {:.3}", curve[0], curve[curve.len() - 1]);
}
