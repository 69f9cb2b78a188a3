//! Policy-gradient alignment of a toy denoising process.
//!
//! A trajectory starts from `x ~ N(0, I)` and the policy proposes the next
//! representation `horizon` times; only the final one is rewarded. Updates use
//! the clipped importance-weighted surrogate with plain gradient ascent.

mod config;
mod mdp;
mod policy;
mod train;
mod verbal;

pub use config::{run, RunConfig, Task};
pub use mdp::{rollout, ContextSource, DenoisingMdp, State, Step, Trajectory};
pub use policy::{GaussianPolicy, MeanFunction, PolicyKind};
pub use train::{
    advantages, block_means, clipped_surrogate, is_statistically_nondecreasing, smooth,
    worst_block_drop, train, update, write_curve_csv, CurvePoint, FnReward,
    QuadraticReward, SurrogateTerm, TerminalReward, TrainOutcome, TrainerConfig, UpdateStats,
};
pub use verbal::{color_frequency, train_with_verbal_reward, ColorFeaturizer, VerbalReward};

#[derive(Debug, thiserror::Error)]
pub enum DdpoError {
    #[error("config: {0}")]
    Config(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Reward(#[from] crate::reward::RewardError),
}
