//! Training against the language-model reward through a toy featurizer.

use super::mdp::{rollout, DenoisingMdp, Trajectory};
use super::policy::GaussianPolicy;
use super::train::{train, TerminalReward, TrainOutcome, TrainerConfig};
use super::DdpoError;
use crate::dataset::{Kpis, PromptFields, Schema};
use crate::metrics::RgbTable;
use crate::reward::{reward_batch, LogitBackend, RewardOptions, RewardRequest};
use crate::verbalization::{BBox, ColorEntry, ColorName, ObjectEntry, Resolution, ToneMix, Verbalization};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Reads the first three coordinates of a representation as an RGB color
/// (through a sigmoid) and the first two as the position of one object.
#[derive(Clone, Debug)]
pub struct ColorFeaturizer {
    pub table: RgbTable,
    pub resolution: Resolution,
    pub object_label: String,
}

impl Default for ColorFeaturizer {
    fn default() -> Self {
        Self {
            table: RgbTable::default(),
            resolution: Resolution::new(512, 512),
            object_label: "shape".into(),
        }
    }
}

impl ColorFeaturizer {
    pub fn color(&self, x: &[f64]) -> ColorName {
        let c = |i: usize| sigmoid(x.get(i).copied().unwrap_or(0.0));
        self.table.nearest([c(0), c(1), c(2)])
    }

    pub fn featurize(&self, x: &[f64]) -> Verbalization {
        let (w, h) = (self.resolution.width as f64, self.resolution.height as f64);
        let cx = sigmoid(x.first().copied().unwrap_or(0.0)) * w;
        let cy = sigmoid(x.get(1).copied().unwrap_or(0.0)) * h;
        let (hw, hh) = (w / 8.0, h / 8.0);
        let bbox = BBox::new(
            round2((cx - hw).max(0.0)),
            round2((cy - hh).max(0.0)),
            round2((cx + hw).min(w)),
            round2((cy + hh).min(h)),
        );
        Verbalization::new(
            vec![ColorEntry {
                color: self.color(x),
                coverage: 1.0,
            }],
            ToneMix::default(),
            vec![ObjectEntry::new(self.object_label.clone(), bbox)],
        )
    }
}

/// Terminal reward: the language-model score of the featurized terminal
/// state under a fixed prompt.
pub struct VerbalReward<'a, B: ?Sized> {
    pub featurizer: ColorFeaturizer,
    pub backend: &'a B,
    pub prompt: PromptFields,
    pub target_kpis: Kpis,
    pub schema: Schema,
    pub options: RewardOptions,
}

impl<B: LogitBackend + ?Sized> TerminalReward for VerbalReward<'_, B> {
    fn rewards(&self, trajectories: &[Trajectory]) -> Result<Vec<f64>, DdpoError> {
        let reqs: Vec<RewardRequest> = trajectories
            .iter()
            .map(|t| RewardRequest {
                prompt: self.prompt.clone(),
                target_kpis: self.target_kpis.clone(),
                verbalization: self.featurizer.featurize(t.terminal()),
                schema: self.schema,
            })
            .collect();
        Ok(reward_batch(&reqs, self.backend, &self.options)?)
    }
}

pub fn train_with_verbal_reward<B: LogitBackend + ?Sized>(
    mdp: &DenoisingMdp,
    policy: GaussianPolicy,
    reward: &VerbalReward<'_, B>,
    config: &TrainerConfig,
) -> Result<TrainOutcome, DdpoError> {
    if mdp.dim < 3 {
        return Err(DdpoError::Config(format!(
            "the color featurizer needs at least 3 dimensions, process has {}",
            mdp.dim
        )));
    }
    train(mdp, policy, reward, config)
}

/// Share of `n` sampled terminal states whose color is `target`.
pub fn color_frequency(
    mdp: &DenoisingMdp,
    policy: &GaussianPolicy,
    featurizer: &ColorFeaturizer,
    target: ColorName,
    n: usize,
    seed: u64,
) -> f64 {
    let trajs = rollout(mdp, policy, n, seed);
    let hits = trajs.iter().filter(|t| featurizer.color(t.terminal()) == target).count();
    hits as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpo::mdp::ContextSource;
    use crate::ddpo::policy::{MeanFunction, PolicyKind};
    use crate::reward::MockBackend;

    #[test]
    fn featurizer_is_deterministic_and_valid() {
        let f = ColorFeaturizer::default();
        let x = [3.0, -4.0, 5.0];
        let v = f.featurize(&x);
        assert_eq!(v, f.featurize(&x));
        assert_eq!(v.colors[0].color, ColorName::Magenta);
        v.validate(Some(f.resolution)).unwrap();
        assert_eq!(f.color(&[0.0, 0.0, 0.0]), ColorName::Gray);
        assert_eq!(f.color(&[-9.0, -9.0, -9.0]), ColorName::Black);
    }

    #[test]
    fn constant_featurizer_does_not_learn() {
        let mdp = DenoisingMdp::new(2, 3, ContextSource::none()).unwrap();
        let p = GaussianPolicy::new(MeanFunction::zeros(PolicyKind::Affine, mdp.feature_dim(), 3), 1e-4).unwrap();
        let backend = MockBackend::keyword(&["Magenta"], 0.9, 0.1);
        let prompt = PromptFields {
            caption: "c".into(),
            keywords: vec![],
            width: 512,
            height: 512,
            release_date: "2024-01-01".into(),
            account: None,
            text: None,
        };
        let reward = VerbalReward {
            featurizer: ColorFeaturizer::default(),
            backend: &backend,
            prompt,
            target_kpis: [("downloads", 1), ("forwards", 1), ("impressions", 1)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            schema: Schema::Stock,
            options: RewardOptions::default(),
        };
        // tiny noise keeps every terminal state Gray with the same rounded box
        let reward = VerbalReward {
            featurizer: ColorFeaturizer {
                resolution: Resolution::new(16, 16),
                ..ColorFeaturizer::default()
            },
            ..reward
        };
        let cfg = TrainerConfig {
            max_updates: 3,
            batch_size: 8,
            ..TrainerConfig::default()
        };
        let out = train_with_verbal_reward(&mdp, p.clone(), &reward, &cfg).unwrap();
        assert_eq!(out.zero_variance_updates, 3);
        assert_eq!(out.policy, p);
    }
}
