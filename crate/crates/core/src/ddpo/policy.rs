//! Gaussian policies over the next representation with hand-derived
//! gradients.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DdpoError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Affine,
    /// One hidden layer of `hidden` tanh units.
    Tanh { hidden: usize },
}

/// Parameterized mean map from an input feature vector to an action mean.
///
/// Parameters are stored flat. Affine: `W` row-major (`out x in`), then `b`.
/// Tanh: `W1` (`hidden x in`), `b1`, `W2` (`out x hidden`), `b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFunction {
    kind: PolicyKind,
    in_dim: usize,
    out_dim: usize,
    params: Vec<f64>,
}

impl MeanFunction {
    pub fn param_count(kind: PolicyKind, in_dim: usize, out_dim: usize) -> usize {
        match kind {
            PolicyKind::Affine => out_dim * in_dim + out_dim,
            PolicyKind::Tanh { hidden } => hidden * in_dim + hidden + out_dim * hidden + out_dim,
        }
    }

    /// All-zero parameters.
    pub fn zeros(kind: PolicyKind, in_dim: usize, out_dim: usize) -> Self {
        Self {
            kind,
            in_dim,
            out_dim,
            params: vec![0.0; Self::param_count(kind, in_dim, out_dim)],
        }
    }

    /// Zero affine map, or a tanh net with `N(0, 1/in)` first-layer weights
    /// and a zero output layer, so the initial mean is zero either way.
    pub fn init<R: Rng + ?Sized>(kind: PolicyKind, in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut f = Self::zeros(kind, in_dim, out_dim);
        if let PolicyKind::Tanh { hidden } = kind {
            let scale = 1.0 / (in_dim.max(1) as f64).sqrt();
            for w in &mut f.params[..hidden * in_dim] {
                let z: f64 = StandardNormal.sample(rng);
                *w = scale * z;
            }
        }
        f
    }

    pub fn from_params(kind: PolicyKind, in_dim: usize, out_dim: usize, params: Vec<f64>) -> Result<Self, DdpoError> {
        let want = Self::param_count(kind, in_dim, out_dim);
        if params.len() != want {
            return Err(DdpoError::Config(format!("{} parameters, expected {want}", params.len())));
        }
        Ok(Self {
            kind,
            in_dim,
            out_dim,
            params,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn hidden(&self, input: &[f64], hidden: usize) -> Vec<f64> {
        let (w1, rest) = self.params.split_at(hidden * self.in_dim);
        let b1 = &rest[..hidden];
        (0..hidden)
            .map(|j| {
                let row = &w1[j * self.in_dim..(j + 1) * self.in_dim];
                (b1[j] + dot(row, input)).tanh()
            })
            .collect()
    }

    pub fn eval(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.in_dim);
        match self.kind {
            PolicyKind::Affine => affine(&self.params, input, self.out_dim),
            PolicyKind::Tanh { hidden } => {
                let h = self.hidden(input, hidden);
                affine(&self.params[hidden * self.in_dim + hidden..], &h, self.out_dim)
            }
        }
    }

    /// Vector-Jacobian product `v^T dmu/dtheta`, accumulated into `grad`
    /// scaled by `scale`.
    pub fn accumulate_vjp(&self, input: &[f64], v: &[f64], scale: f64, grad: &mut [f64]) {
        let n_in = self.in_dim;
        match self.kind {
            PolicyKind::Affine => affine_vjp(input, v, scale, grad),
            PolicyKind::Tanh { hidden } => {
                let h = self.hidden(input, hidden);
                let first = hidden * n_in + hidden;
                let w2 = &self.params[first..first + self.out_dim * hidden];
                affine_vjp(&h, v, scale, &mut grad[first..]);
                // back through the output layer and tanh
                for j in 0..hidden {
                    let back: f64 = (0..self.out_dim).map(|o| v[o] * w2[o * hidden + j]).sum();
                    let pre = back * (1.0 - h[j] * h[j]) * scale;
                    for (g, x) in grad[j * n_in..(j + 1) * n_in].iter_mut().zip(input) {
                        *g += pre * x;
                    }
                    grad[hidden * n_in + j] += pre;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn affine(params: &[f64], input: &[f64], out_dim: usize) -> Vec<f64> {
    let n = input.len();
    let (w, b) = params.split_at(out_dim * n);
    (0..out_dim).map(|o| b[o] + dot(&w[o * n..(o + 1) * n], input)).collect()
}

fn affine_vjp(input: &[f64], v: &[f64], scale: f64, grad: &mut [f64]) {
    let n = input.len();
    let out = v.len();
    for o in 0..out {
        let s = v[o] * scale;
        for (g, x) in grad[o * n..(o + 1) * n].iter_mut().zip(input) {
            *g += s * x;
        }
        grad[out * n + o] += s;
    }
}

/// `a ~ N(mu(c, x, t/T), sigma^2 I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolicy {
    pub mean: MeanFunction,
    /// Standard deviation used at every step.
    pub sigma: f64,
}

const CHECKPOINT_HEADER: &str = "verbalign-policy v1";

impl GaussianPolicy {
    pub fn new(mean: MeanFunction, sigma: f64) -> Result<Self, DdpoError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(DdpoError::Config(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { mean, sigma })
    }

    pub fn sigma_at(&self, _steps_left: usize) -> f64 {
        self.sigma
    }

    pub fn log_density(&self, input: &[f64], action: &[f64], steps_left: usize) -> f64 {
        let sigma = self.sigma_at(steps_left);
        let mu = self.mean.eval(input);
        let sq: f64 = mu.iter().zip(action).map(|(m, a)| (a - m) * (a - m)).sum();
        let d = action.len() as f64;
        -0.5 * sq / (sigma * sigma) - d * (sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Adds `scale * d log p(action | input) / d theta` into `grad` and
    /// returns the log-density.
    pub fn accumulate_logprob_grad(
        &self,
        input: &[f64],
        action: &[f64],
        steps_left: usize,
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        let sigma = self.sigma_at(steps_left);
        let var = sigma * sigma;
        let mu = self.mean.eval(input);
        let v: Vec<f64> = mu.iter().zip(action).map(|(m, a)| (a - m) / var).collect();
        self.mean.accumulate_vjp(input, &v, scale, grad);
        let sq: f64 = mu.iter().zip(action).map(|(m, a)| (a - m) * (a - m)).sum();
        let d = action.len() as f64;
        -0.5 * sq / var - d * (sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
    }

    pub fn logprob_grad(&self, input: &[f64], action: &[f64], steps_left: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.mean.params().len()];
        self.accumulate_logprob_grad(input, action, steps_left, 1.0, &mut g);
        g
    }

    pub fn sample<R: Rng + ?Sized>(&self, input: &[f64], steps_left: usize, rng: &mut R) -> Vec<f64> {
        let sigma = self.sigma_at(steps_left);
        self.mean
            .eval(input)
            .into_iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + sigma * z
            })
            .collect()
    }

    /// Plain-text dump of the parameters behind a version header.
    pub fn to_checkpoint(&self) -> String {
        let mut s = String::new();
        let hidden = match self.mean.kind {
            PolicyKind::Affine => 0,
            PolicyKind::Tanh { hidden } => hidden,
        };
        let kind = match self.mean.kind {
            PolicyKind::Affine => "affine",
            PolicyKind::Tanh { .. } => "tanh",
        };
        writeln!(s, "{CHECKPOINT_HEADER}").unwrap();
        writeln!(s, "kind {kind}").unwrap();
        writeln!(s, "in {}", self.mean.in_dim).unwrap();
        writeln!(s, "out {}", self.mean.out_dim).unwrap();
        writeln!(s, "hidden {hidden}").unwrap();
        writeln!(s, "sigma {:?}", self.sigma).unwrap();
        writeln!(s, "params {}", self.mean.params.len()).unwrap();
        for p in &self.mean.params {
            writeln!(s, "{p:?}").unwrap();
        }
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, DdpoError> {
        let bad = |m: &str| DdpoError::Checkpoint(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some(CHECKPOINT_HEADER) {
            return Err(bad("missing or unsupported header"));
        }
        let mut field = |name: &str| -> Result<String, DdpoError> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{name}`")))?;
            line.strip_prefix(name)
                .and_then(|v| v.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected `{name}`, found `{line}`")))
        };
        fn num<T: FromStr>(v: String, what: &str) -> Result<T, DdpoError> {
            v.trim()
                .parse()
                .map_err(|_| DdpoError::Checkpoint(format!("bad {what} `{v}`")))
        }
        let kind = field("kind")?;
        let in_dim: usize = num(field("in")?, "in")?;
        let out_dim: usize = num(field("out")?, "out")?;
        let hidden: usize = num(field("hidden")?, "hidden")?;
        let sigma: f64 = num(field("sigma")?, "sigma")?;
        let count: usize = num(field("params")?, "params")?;
        let kind = match kind.as_str() {
            "affine" => PolicyKind::Affine,
            "tanh" => PolicyKind::Tanh { hidden },
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        let params = lines
            .take_while(|l| !l.trim().is_empty())
            .map(|l| num::<f64>(l.to_string(), "parameter"))
            .collect::<Result<Vec<_>, _>>()?;
        if params.len() != count {
            return Err(bad(&format!("{} parameters listed, header says {count}", params.len())));
        }
        Self::new(MeanFunction::from_params(kind, in_dim, out_dim, params)?, sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn affine_bias_gradient_closed_form() {
        let mut f = MeanFunction::zeros(PolicyKind::Affine, 1, 1);
        f.params_mut().copy_from_slice(&[0.7, -0.2]);
        let p = GaussianPolicy::new(f, 0.5).unwrap();
        let x = [1.3];
        let mu = 0.7 * 1.3 - 0.2;
        let a = [0.4];
        let g = p.logprob_grad(&x, &a, 1);
        let db = (a[0] - mu) / 0.25;
        assert!((g[1] - db).abs() < 1e-12);
        assert!((g[0] - db * 1.3).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = MeanFunction::init(PolicyKind::Tanh { hidden: 4 }, 3, 2, &mut rng);
        for p in f.params_mut() {
            *p += 0.3;
        }
        let p = GaussianPolicy::new(f, 0.1).unwrap();
        let x = [0.1, -0.5, 0.9];
        let mu = p.mean.eval(&x);
        assert!(p.logprob_grad(&x, &mu, 2).iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn log_density_matches_gaussian() {
        let p = GaussianPolicy::new(MeanFunction::zeros(PolicyKind::Affine, 2, 1), 2.0).unwrap();
        let expected = -0.5 * (1.5f64 / 2.0).powi(2) - (2.0f64).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((p.log_density(&[3.0, 1.0], &[1.5], 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = MeanFunction::init(PolicyKind::Tanh { hidden: 3 }, 4, 2, &mut rng);
        let p = GaussianPolicy::new(f, 0.1).unwrap();
        let text = p.to_checkpoint();
        assert!(text.starts_with("verbalign-policy v1\n"));
        assert_eq!(GaussianPolicy::from_checkpoint(&text).unwrap(), p);
        assert!(GaussianPolicy::from_checkpoint("verbalign-policy v9\n").is_err());
        let truncated: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(GaussianPolicy::from_checkpoint(&truncated).is_err());
    }

    #[test]
    fn rejects_bad_sigma() {
        let f = MeanFunction::zeros(PolicyKind::Affine, 1, 1);
        assert!(GaussianPolicy::new(f.clone(), 0.0).is_err());
        assert!(GaussianPolicy::new(f, f64::NAN).is_err());
    }
}
