use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mdp::{ContextSource, DenoisingMdp};
use super::policy::{GaussianPolicy, MeanFunction, PolicyKind};
use super::train::{train, QuadraticReward, TrainOutcome, TrainerConfig};
use super::verbal::{train_with_verbal_reward, ColorFeaturizer, VerbalReward};
use super::DdpoError;
use crate::dataset::{PromptFields, Schema};
use crate::reward::{LogitBackend, MockBackend, RetryPolicy, RewardOptions};
use crate::verbalization::ColorName;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// Reward `-|x - c|^2` with the context as goal.
    Quadratic,
    /// Language-model reward of the featurized terminal state. Without a live
    /// backend, a mock gives tokens equal to `target_color` probability `hit`
    /// and everything else `miss`.
    Verbal {
        target_color: String,
        #[serde(default = "default_hit")]
        hit: f64,
        #[serde(default = "default_miss")]
        miss: f64,
    },
}

fn default_hit() -> f64 {
    0.9
}

fn default_miss() -> f64 {
    0.1
}

/// Everything a training run needs, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mdp: DenoisingMdp,
    /// Per-step policy standard deviation.
    pub sigma: f64,
    pub policy: PolicyKind,
    pub trainer: TrainerConfig,
    pub task: Task,
}

impl Default for RunConfig {
    /// The quadratic toy task: `d = 2`, five steps, `sigma = 0.1`.
    fn default() -> Self {
        Self {
            mdp: DenoisingMdp {
                horizon: 5,
                dim: 2,
                context: ContextSource::Normal { dim: 2, scale: 1.0 },
            },
            sigma: 0.1,
            policy: PolicyKind::Affine,
            trainer: TrainerConfig::default(),
            task: Task::Quadratic,
        }
    }
}

impl RunConfig {
    /// Toy color task: three dimensions read as RGB, rewarded for `target`.
    pub fn verbal(target: ColorName) -> Self {
        Self {
            mdp: DenoisingMdp {
                horizon: 2,
                dim: 3,
                context: ContextSource::none(),
            },
            // wide noise so the corner colors get sampled before training
            sigma: 3.0,
            policy: PolicyKind::Affine,
            trainer: TrainerConfig {
                batch_size: 32,
                learning_rate: 0.2,
                max_updates: 300,
                ..TrainerConfig::default()
            },
            task: Task::Verbal {
                target_color: target.as_str().to_string(),
                hit: default_hit(),
                miss: default_miss(),
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, DdpoError> {
        let cfg: Self = toml::from_str(text).map_err(|e| DdpoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), DdpoError> {
        DenoisingMdp::new(self.mdp.horizon, self.mdp.dim, self.mdp.context.clone())?;
        self.trainer.validate()?;
        if let Task::Verbal { target_color, hit, miss } = &self.task {
            target_color
                .parse::<ColorName>()
                .map_err(|e| DdpoError::Config(e.to_string()))?;
            for p in [hit, miss] {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(DdpoError::Config(format!("probability {p} outside (0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Initial policy. Tanh first layers are drawn from the trainer seed.
    pub fn initial_policy(&self) -> Result<GaussianPolicy, DdpoError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.trainer.seed);
        let mean = MeanFunction::init(self.policy, self.mdp.feature_dim(), self.mdp.dim, &mut rng);
        GaussianPolicy::new(mean, self.sigma)
    }
}

/// Prompt used when scoring featurized states.
pub fn toy_prompt() -> PromptFields {
    PromptFields {
        caption: "A bold flat-color poster for a product launch".into(),
        keywords: vec!["poster".into(), "color".into(), "launch".into()],
        width: 512,
        height: 512,
        release_date: "2024-01-01".into(),
        account: None,
        text: None,
    }
}

/// Trains as configured. `backend` replaces the mock for the verbal task.
pub fn run(config: &RunConfig, backend: Option<&dyn LogitBackend>) -> Result<TrainOutcome, DdpoError> {
    config.validate()?;
    let policy = config.initial_policy()?;
    match &config.task {
        Task::Quadratic => train(&config.mdp, policy, &QuadraticReward, &config.trainer),
        Task::Verbal { target_color, hit, miss } => {
            let mock = MockBackend::keyword(&[target_color], *hit, *miss);
            let backend: &dyn LogitBackend = backend.unwrap_or(&mock);
            let reward = VerbalReward {
                featurizer: ColorFeaturizer::default(),
                backend,
                prompt: toy_prompt(),
                target_kpis: Schema::Stock
                    .kpi_names()
                    .iter()
                    .map(|k| (k.to_string(), 1000))
                    .collect(),
                schema: Schema::Stock,
                options: RewardOptions {
                    retry: RetryPolicy::default(),
                    ..RewardOptions::default()
                },
            };
            train_with_verbal_reward(&config.mdp, policy, &reward, &config.trainer)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for cfg in [RunConfig::default(), RunConfig::verbal(ColorName::Magenta)] {
            let text = cfg.to_toml();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn hand_written_config() {
        let text = r#"
sigma = 0.1

[mdp]
horizon = 5
dim = 2
context = { kind = "normal", dim = 2, scale = 1.0 }

[policy]
kind = "tanh"
hidden = 8

[trainer]
batch_size = 16
learning_rate = 0.001
clip_epsilon = 0.2
inner_epochs = 1
normalize_advantages = true
seed = 3
max_updates = 10

[task]
kind = "quadratic"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.policy, PolicyKind::Tanh { hidden: 8 });
        assert_eq!(run(&cfg, None).unwrap().curve.len(), 10);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::verbal(ColorName::Red);
        cfg.task = Task::Verbal {
            target_color: "Chartreuse".into(),
            hit: 0.9,
            miss: 0.1,
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_toml("sigma = 0.1\nunknown = 1").is_err());
    }
}
