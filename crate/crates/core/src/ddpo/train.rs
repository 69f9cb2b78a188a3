use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mdp::{rollout, DenoisingMdp, Trajectory};
use super::policy::GaussianPolicy;
use super::DdpoError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    /// Trajectories per update.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Importance-ratio clip range `[1 - eps, 1 + eps]`.
    pub clip_epsilon: f64,
    /// Gradient steps per batch.
    pub inner_epochs: usize,
    pub normalize_advantages: bool,
    pub seed: u64,
    pub max_updates: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 2e-3,
            clip_epsilon: 0.2,
            inner_epochs: 2,
            normalize_advantages: true,
            seed: 0,
            max_updates: 2000,
        }
    }
}

impl TrainerConfig {
    /// A zero learning rate is accepted for no-op control runs.
    pub fn validate(&self) -> Result<(), DdpoError> {
        let bad = |m: String| Err(DdpoError::Config(m));
        if self.batch_size == 0 || self.inner_epochs == 0 || self.max_updates == 0 {
            return bad("batch size, inner epochs and max updates must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad(format!("clip epsilon {} outside (0, 1)", self.clip_epsilon));
        }
        Ok(())
    }
}

/// Scalar reward of terminal states.
pub trait TerminalReward: Sync {
    fn rewards(&self, trajectories: &[Trajectory]) -> Result<Vec<f64>, DdpoError>;
}

/// `-|x - c|^2`: the context is the goal.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuadraticReward;

impl TerminalReward for QuadraticReward {
    fn rewards(&self, trajectories: &[Trajectory]) -> Result<Vec<f64>, DdpoError> {
        Ok(trajectories
            .iter()
            .map(|t| {
                -t.terminal()
                    .iter()
                    .zip(&t.context)
                    .map(|(x, g)| (x - g) * (x - g))
                    .sum::<f64>()
            })
            .collect())
    }
}

/// Reward from a closure of `(context, terminal)`.
pub struct FnReward<F>(pub F);

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> TerminalReward for FnReward<F> {
    fn rewards(&self, trajectories: &[Trajectory]) -> Result<Vec<f64>, DdpoError> {
        Ok(trajectories.iter().map(|t| (self.0)(&t.context, t.terminal())).collect())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Batch advantages. With normalization, `(r - mean) / (std + 1e-8)`; when
/// all rewards are equal the advantages are only centered (all zero) and the
/// second value is `true`.
pub fn advantages(rewards: &[f64], normalize: bool) -> (Vec<f64>, bool) {
    if !normalize {
        return (rewards.to_vec(), false);
    }
    let (mean, std) = mean_std(rewards);
    if std <= 1e-12 * mean.abs().max(1.0) {
        return (rewards.iter().map(|r| r - mean).collect(), true);
    }
    (rewards.iter().map(|r| (r - mean) / (std + 1e-8)).collect(), false)
}

/// One step's clipped surrogate `min(rho A, clip(rho, 1-eps, 1+eps) A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateTerm {
    pub objective: f64,
    /// Multiplier of `d log p_new / d theta` in the objective's gradient;
    /// zero when the clipped branch is active.
    pub grad_scale: f64,
    pub clipped: bool,
}

pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> SurrogateTerm {
    let unclipped = ratio * advantage;
    let clipped_value = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    if clipped_value < unclipped {
        SurrogateTerm {
            objective: clipped_value,
            grad_scale: 0.0,
            clipped: true,
        }
    } else {
        SurrogateTerm {
            objective: unclipped,
            grad_scale: unclipped,
            clipped: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub mean_reward: f64,
    pub std_reward: f64,
    /// Over all steps of all inner epochs.
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    /// `max |rho - 1|` in the first inner epoch.
    pub first_epoch_ratio_deviation: f64,
    /// Equal rewards forced centered-only advantages.
    pub zero_variance: bool,
}

/// Gradient of the mean surrogate over all steps, plus `(ratio sum, clipped
/// count, max |rho - 1|)`.
fn surrogate_gradient(
    policy: &GaussianPolicy,
    trajectories: &[Trajectory],
    advs: &[f64],
    eps: f64,
) -> (Vec<f64>, f64, usize, f64) {
    let n_params = policy.mean.params().len();
    let per_traj: Vec<(Vec<f64>, f64, usize, f64)> = trajectories
        .par_iter()
        .zip(advs)
        .map(|(t, &a)| {
            let mut g = vec![0.0; n_params];
            let (mut ratios, mut clipped, mut dev) = (0.0, 0, 0.0f64);
            for s in &t.steps {
                let logp = policy.log_density(&s.features, &s.action, s.steps_left);
                let ratio = (logp - s.logprob).exp();
                let term = clipped_surrogate(ratio, a, eps);
                if term.grad_scale != 0.0 {
                    policy.accumulate_logprob_grad(&s.features, &s.action, s.steps_left, term.grad_scale, &mut g);
                }
                ratios += ratio;
                clipped += usize::from(term.clipped);
                dev = dev.max((ratio - 1.0).abs());
            }
            (g, ratios, clipped, dev)
        })
        .collect();
    // summed in trajectory order so results do not depend on scheduling
    let mut grad = vec![0.0; n_params];
    let (mut ratios, mut clipped, mut dev) = (0.0, 0, 0.0f64);
    for (g, r, c, d) in per_traj {
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc += x;
        }
        ratios += r;
        clipped += c;
        dev = dev.max(d);
    }
    let steps: usize = trajectories.iter().map(|t| t.steps.len()).sum();
    for x in &mut grad {
        *x /= steps.max(1) as f64;
    }
    (grad, ratios, clipped, dev)
}

/// Clipped policy-gradient ascent on one batch.
pub fn update(
    policy: &mut GaussianPolicy,
    trajectories: &[Trajectory],
    rewards: &[f64],
    config: &TrainerConfig,
) -> Result<UpdateStats, DdpoError> {
    if trajectories.is_empty() || trajectories.len() != rewards.len() {
        return Err(DdpoError::Config(format!(
            "{} trajectories with {} rewards",
            trajectories.len(),
            rewards.len()
        )));
    }
    let (mean_reward, std_reward) = mean_std(rewards);
    let (advs, zero_variance) = advantages(rewards, config.normalize_advantages);
    let steps: usize = trajectories.iter().map(|t| t.steps.len()).sum();
    let (mut ratio_sum, mut clipped, mut first_dev) = (0.0, 0, 0.0);
    for epoch in 0..config.inner_epochs {
        let (grad, r, c, dev) = surrogate_gradient(policy, trajectories, &advs, config.clip_epsilon);
        ratio_sum += r;
        clipped += c;
        if epoch == 0 {
            first_dev = dev;
        }
        for (p, g) in policy.mean.params_mut().iter_mut().zip(&grad) {
            *p += config.learning_rate * g;
        }
    }
    if policy.mean.params().iter().any(|p| !p.is_finite()) {
        return Err(DdpoError::Diverged("non-finite policy parameter".into()));
    }
    let total = (steps * config.inner_epochs).max(1) as f64;
    Ok(UpdateStats {
        mean_reward,
        std_reward,
        mean_ratio: ratio_sum / total,
        clip_fraction: clipped as f64 / total,
        first_epoch_ratio_deviation: first_dev,
        zero_variance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub clip_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub curve: Vec<CurvePoint>,
    pub policy: GaussianPolicy,
    /// Updates that hit equal rewards across the batch.
    pub zero_variance_updates: usize,
}

impl TrainOutcome {
    pub fn mean_rewards(&self) -> Vec<f64> {
        self.curve.iter().map(|p| p.mean_reward).collect()
    }
}

/// Alternates rollouts and updates for `config.max_updates` rounds. The
/// rollout seed of each round is drawn from a generator seeded with
/// `config.seed`.
pub fn train<R: TerminalReward + ?Sized>(
    mdp: &DenoisingMdp,
    mut policy: GaussianPolicy,
    reward: &R,
    config: &TrainerConfig,
) -> Result<TrainOutcome, DdpoError> {
    config.validate()?;
    if policy.mean.in_dim() != mdp.feature_dim() || policy.mean.out_dim() != mdp.dim {
        return Err(DdpoError::Config(format!(
            "policy maps {} -> {}, process needs {} -> {}",
            policy.mean.in_dim(),
            policy.mean.out_dim(),
            mdp.feature_dim(),
            mdp.dim
        )));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut curve = Vec::with_capacity(config.max_updates);
    let mut zero_variance_updates = 0;
    for update_index in 0..config.max_updates {
        let trajs = rollout(mdp, &policy, config.batch_size, seeds.random());
        let rewards = reward.rewards(&trajs)?;
        let stats = update(&mut policy, &trajs, &rewards, config)?;
        if !stats.mean_reward.is_finite() {
            return Err(DdpoError::Diverged(format!("mean reward {} at update {update_index}", stats.mean_reward)));
        }
        if stats.zero_variance {
            zero_variance_updates += 1;
            log::debug!("update {update_index}: equal rewards, advantages centered only");
        }
        curve.push(CurvePoint {
            update: update_index,
            mean_reward: stats.mean_reward,
            std_reward: stats.std_reward,
            clip_fraction: stats.clip_fraction,
        });
    }
    Ok(TrainOutcome {
        curve,
        policy,
        zero_variance_updates,
    })
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["update", "mean_reward", "std_reward", "clip_fraction"])?;
    for p in curve {
        w.write_record([
            p.update.to_string(),
            format!("{:?}", p.mean_reward),
            format!("{:?}", p.std_reward),
            format!("{:?}", p.clip_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Trailing moving average over up to `window` values.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Mean and standard error of each full block of `block` values.
pub fn block_means(values: &[f64], block: usize) -> Vec<(f64, f64)> {
    values
        .chunks_exact(block.max(2))
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}

/// Largest drop of a later block below an earlier one, in combined
/// standard errors. Negative when every later block is higher.
pub fn worst_block_drop(values: &[f64], block: usize) -> f64 {
    let blocks = block_means(values, block);
    let mut worst = f64::NEG_INFINITY;
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            let se = (a.1 * a.1 + b.1 * b.1).sqrt().max(f64::MIN_POSITIVE);
            worst = worst.max((a.0 - b.0) / se);
        }
    }
    worst
}

/// Whether a noisy curve never falls significantly: no block of `block`
/// values lies more than `z` standard errors below an earlier block.
///
/// Pass roughly independent values such as per-update batch means. An
/// already smoothed curve is autocorrelated and its block errors come out
/// too small.
pub fn is_statistically_nondecreasing(values: &[f64], block: usize, z: f64) -> bool {
    worst_block_drop(values, block) <= z
}
