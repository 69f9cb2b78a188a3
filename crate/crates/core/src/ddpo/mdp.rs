use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::GaussianPolicy;
use super::DdpoError;

/// Where each trajectory's conditioning vector comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSource {
    /// Independent `N(0, scale^2)` coordinates.
    Normal { dim: usize, scale: f64 },
    /// The same vector for every trajectory.
    Fixed { value: Vec<f64> },
}

impl ContextSource {
    pub fn none() -> Self {
        ContextSource::Fixed { value: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        match self {
            ContextSource::Normal { dim, .. } => *dim,
            ContextSource::Fixed { value } => value.len(),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ContextSource::Normal { dim, scale } => (0..*dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                })
                .collect(),
            ContextSource::Fixed { value } => value.clone(),
        }
    }
}

/// Finite-horizon denoising process: start from `x ~ N(0, I_d)` and let the
/// policy pick the next representation `horizon` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoisingMdp {
    pub horizon: usize,
    pub dim: usize,
    pub context: ContextSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub context: Vec<f64>,
    /// Steps left, from `horizon` down to 1.
    pub steps_left: usize,
    pub x: Vec<f64>,
}

impl DenoisingMdp {
    pub fn new(horizon: usize, dim: usize, context: ContextSource) -> Result<Self, DdpoError> {
        if horizon == 0 || dim == 0 {
            return Err(DdpoError::Config("horizon and dimension must be at least 1".into()));
        }
        Ok(Self { horizon, dim, context })
    }

    /// Length of the policy input `[context; x; steps_left / horizon]`.
    pub fn feature_dim(&self) -> usize {
        self.context.dim() + self.dim + 1
    }

    pub fn features(&self, state: &State) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.feature_dim());
        f.extend_from_slice(&state.context);
        f.extend_from_slice(&state.x);
        f.push(state.steps_left as f64 / self.horizon as f64);
        f
    }

    /// Deterministic transition: context kept, one step fewer, `x` replaced
    /// by the action.
    pub fn transition(&self, state: &State, action: &[f64]) -> State {
        State {
            context: state.context.clone(),
            steps_left: state.steps_left - 1,
            x: action.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    /// Policy input at this step.
    pub features: Vec<f64>,
    pub steps_left: usize,
    pub action: Vec<f64>,
    /// Log-density of the action under the sampling policy.
    pub logprob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub context: Vec<f64>,
    pub initial: Vec<f64>,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.steps.last().map_or(&self.initial, |s| &s.action)
    }
}

/// Samples `n` trajectories. Trajectory `i` draws from stream `i` of a
/// generator seeded with `seed`, so results do not depend on scheduling.
pub fn rollout(mdp: &DenoisingMdp, policy: &GaussianPolicy, n: usize, seed: u64) -> Vec<Trajectory> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let context = mdp.context.sample(&mut rng);
            let initial: Vec<f64> = (0..mdp.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut state = State {
                context: context.clone(),
                steps_left: mdp.horizon,
                x: initial.clone(),
            };
            let mut steps = Vec::with_capacity(mdp.horizon);
            while state.steps_left > 0 {
                let features = mdp.features(&state);
                let action = policy.sample(&features, state.steps_left, &mut rng);
                let logprob = policy.log_density(&features, &action, state.steps_left);
                let next = mdp.transition(&state, &action);
                steps.push(Step {
                    features,
                    steps_left: state.steps_left,
                    action,
                    logprob,
                });
                state = next;
            }
            Trajectory {
                context,
                initial,
                steps,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpo::policy::{MeanFunction, PolicyKind};

    fn policy(in_dim: usize, out: usize, sigma: f64) -> GaussianPolicy {
        GaussianPolicy::new(MeanFunction::zeros(PolicyKind::Affine, in_dim, out), sigma).unwrap()
    }

    #[test]
    fn lengths_and_determinism() {
        let mdp = DenoisingMdp::new(5, 2, ContextSource::Normal { dim: 2, scale: 1.0 }).unwrap();
        let p = policy(mdp.feature_dim(), 2, 0.1);
        let a = rollout(&mdp, &p, 16, 3);
        assert_eq!(a, rollout(&mdp, &p, 16, 3));
        assert_ne!(a, rollout(&mdp, &p, 16, 4));
        for t in &a {
            assert_eq!(t.steps.len(), 5);
            let left: Vec<usize> = t.steps.iter().map(|s| s.steps_left).collect();
            assert_eq!(left, [5, 4, 3, 2, 1]);
            assert!(t.steps.iter().all(|s| s.logprob.is_finite()));
        }
        // a prefix of a larger batch is the smaller batch
        assert_eq!(&rollout(&mdp, &p, 20, 3)[..16], &a[..]);
    }

    #[test]
    fn transition_is_pure() {
        let mdp = DenoisingMdp::new(3, 2, ContextSource::none()).unwrap();
        let s = State {
            context: vec![],
            steps_left: 3,
            x: vec![1.0, 2.0],
        };
        let n = mdp.transition(&s, &[5.0, 6.0]);
        assert_eq!(n, State { context: vec![], steps_left: 2, x: vec![5.0, 6.0] });
        assert_eq!(mdp.features(&n), [5.0, 6.0, 2.0 / 3.0]);
    }

    #[test]
    fn tiny_noise_single_step_returns_the_mean() {
        let mdp = DenoisingMdp::new(1, 1, ContextSource::Fixed { value: vec![2.0] }).unwrap();
        let mut f = MeanFunction::zeros(PolicyKind::Affine, 3, 1);
        f.params_mut().copy_from_slice(&[1.0, 0.5, 0.0, 0.25]);
        let p = GaussianPolicy::new(f, 1e-12).unwrap();
        for t in rollout(&mdp, &p, 8, 0) {
            let mu = 2.0 + 0.5 * t.initial[0] + 0.25;
            assert!((t.terminal()[0] - mu).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_state_is_standard_normal() {
        let mdp = DenoisingMdp::new(1, 2, ContextSource::none()).unwrap();
        let p = policy(mdp.feature_dim(), 2, 1.0);
        let n = 100_000;
        let trajs = rollout(&mdp, &p, n, 9);
        for k in 0..2 {
            let mean = trajs.iter().map(|t| t.initial[k]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "{mean}");
        }
    }

    #[test]
    fn rejects_empty_horizon() {
        assert!(DenoisingMdp::new(0, 2, ContextSource::none()).is_err());
    }
}
