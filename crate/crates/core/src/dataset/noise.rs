use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Kpis};

/// Default noise level applied to behavior counts shown in prompts.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `round(v * u)` with `u ~ U[1 - f, 1 + f]`.
    #[default]
    Multiplicative,
    /// `max(0, round(v + scale * u))` with `u ~ U[-f, f]`.
    Additive { scale: f64 },
}

/// Seeded source of KPI noise. Every KPI gets an independent draw, in key
/// order.
#[derive(Clone, Debug)]
pub struct NoiseInjector {
    model: NoiseModel,
    fraction: f64,
    rng: ChaCha8Rng,
}

impl NoiseInjector {
    pub fn new(model: NoiseModel, fraction: f64, seed: u64) -> Result<Self, DatasetError> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(DatasetError::InvalidNoise(fraction));
        }
        Ok(Self {
            model,
            fraction,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn perturb(&mut self, value: u64) -> u64 {
        if self.fraction == 0.0 {
            return value;
        }
        let f = self.fraction;
        let v = value as f64;
        let noisy = match self.model {
            NoiseModel::Multiplicative => v * self.rng.random_range(1.0 - f..=1.0 + f),
            NoiseModel::Additive { scale } => v + scale * self.rng.random_range(-f..=f),
        };
        noisy.round().max(0.0) as u64
    }

    pub fn apply(&mut self, kpis: &Kpis) -> Kpis {
        kpis.iter().map(|(k, v)| (k.clone(), self.perturb(*v))).collect()
    }
}

/// Multiplicative noise on every KPI, reproducible from `seed`.
pub fn inject_noise(kpis: &Kpis, noise_fraction: f64, seed: u64) -> Result<Kpis, DatasetError> {
    Ok(NoiseInjector::new(NoiseModel::Multiplicative, noise_fraction, seed)?.apply(kpis))
}
