//! Behavior-conditioned reward: how likely a KPI-aware language model finds a
//! verbalization, given a prompt that asks for a high-performing image.

mod backend;
mod http;
mod mock;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use backend::{
    check_response, BackendError, LogitBackend, LogitRequest, LogitResponse, RetryPolicy,
    NORMALIZATION_SLACK,
};
pub use http::{HttpBackend, BACKEND_URL_ENV};
pub use mock::{mock_tokenize, MockBackend};

use crate::dataset::{
    bucket_mean, render_input, render_listing, render_output, BucketAssignment, DatasetError,
    KpiBucketLabel, Kpis, MediaRecord, Pattern, PromptFields, Schema,
};
use crate::verbalization::Verbalization;

#[derive(Debug, thiserror::Error)]
pub enum RewardError {
    #[error("rendering the scoring text: {0}")]
    Template(#[from] DatasetError),
    #[error("backend failed after {attempts} attempt(s): {source}")]
    Backend {
        attempts: u32,
        #[source]
        source: BackendError,
    },
    #[error("no tokens in the scored span")]
    EmptyScope,
    #[error("token scores misaligned: {0}")]
    Misaligned(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("cannot pick {k} of {n} candidates")]
    InvalidK { k: usize, n: usize },
}

/// A candidate to score: the prompt it was generated from, the KPI values the
/// prompt asks for, and the candidate's verbalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardRequest {
    pub prompt: PromptFields,
    /// Filled into the KPI fields of the scoring prompt, normally the
    /// high-bucket means.
    pub target_kpis: Kpis,
    pub verbalization: Verbalization,
    pub schema: Schema,
}

/// Scoring text and the character range of the verbalization inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoringText {
    pub text: String,
    pub completion: Range<usize>,
}

impl ScoringText {
    pub fn prefix(&self) -> String {
        self.text.chars().take(self.completion.start).collect()
    }

    pub fn completion_text(&self) -> String {
        self.text.chars().skip(self.completion.start).collect()
    }
}

/// Renders the exact-KPI prompt with the request's targets, followed by the
/// candidate's verbalization as the answer.
pub fn compose_scoring_text(req: &RewardRequest) -> Result<ScoringText, RewardError> {
    let input = render_input(req.schema, Pattern::P1, &req.prompt, &req.target_kpis)?;
    let output = render_output(req.schema, Pattern::P1, Some(&req.verbalization), &req.target_kpis)?;
    let text = render_listing(&input, &output);
    let total = text.chars().count();
    let start = total - output.chars().count();
    Ok(ScoringText {
        text,
        completion: start..total,
    })
}

/// Mean of each schema KPI over the records labeled High.
pub fn high_bucket_targets(
    records: &[MediaRecord],
    assignment: &BucketAssignment,
    schema: Schema,
) -> Result<Kpis, RewardError> {
    schema
        .kpi_names()
        .iter()
        .map(|name| {
            bucket_mean(records, assignment, KpiBucketLabel::High, name)
                .map(|m| (name.to_string(), m.round() as u64))
                .ok_or_else(|| {
                    RewardError::Template(DatasetError::MissingKpi {
                        id: "high bucket".into(),
                        kpi: name.to_string(),
                    })
                })
        })
        .collect()
}

/// Per-token log-probabilities of a scoring text.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenScores {
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
    /// Index of the first token of the verbalization.
    pub completion_offset: usize,
}

impl TokenScores {
    pub fn new(tokens: Vec<String>, logprobs: Vec<f64>, completion_offset: usize) -> Result<Self, RewardError> {
        if tokens.len() != logprobs.len() {
            return Err(RewardError::Misaligned(format!(
                "{} tokens vs {} logprobs",
                tokens.len(),
                logprobs.len()
            )));
        }
        if completion_offset > tokens.len() {
            return Err(RewardError::Misaligned(format!(
                "completion offset {completion_offset} past {} tokens",
                tokens.len()
            )));
        }
        Ok(Self {
            tokens,
            logprobs,
            completion_offset,
        })
    }

    /// Aligns a backend response with `text`. A token belongs to the
    /// completion when it ends after the completion starts, so a token that
    /// straddles the boundary is scored.
    pub fn from_response(response: LogitResponse, text: &ScoringText) -> Result<Self, RewardError> {
        let n = response.tokens.len();
        let total = text.text.chars().count();
        let ends = (0..n).map(|i| response.offsets.get(i + 1).copied().unwrap_or(total));
        let offset = ends
            .enumerate()
            .find(|(_, end)| *end > text.completion.start)
            .map_or(n, |(i, _)| i);
        Self::new(response.tokens, response.logprobs, offset)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Only the verbalization tokens, conditioned on the prompt.
    #[default]
    CompletionOnly,
    FullText,
}

impl FromStr for Scope {
    type Err = RewardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "completion_only" | "completion" => Ok(Scope::CompletionOnly),
            "full_text" | "full" => Ok(Scope::FullText),
            _ => Err(RewardError::InvalidTransform(format!("unknown scope `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreBase {
    SumProb,
    SumLogprob,
}

/// Reduction of per-token log-probabilities to one reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreTransform {
    /// Sum of token probabilities.
    #[default]
    SumProb,
    SumLogprob,
    /// `min(sum_prob, cap)`
    Thresholded { cap: f64 },
    /// `a * base + b`
    Affine { a: f64, b: f64, base: ScoreBase },
}

impl ScoreTransform {
    pub fn validate(&self) -> Result<(), RewardError> {
        let ok = match *self {
            ScoreTransform::Thresholded { cap } => cap.is_finite(),
            ScoreTransform::Affine { a, b, .. } => a.is_finite() && b.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(RewardError::InvalidTransform(format!("non-finite parameter in {self}")))
        }
    }

    pub fn apply(&self, logprobs: &[f64]) -> f64 {
        let sum_prob = || logprobs.iter().map(|l| l.exp()).sum::<f64>();
        let sum_logprob = || logprobs.iter().sum::<f64>();
        match *self {
            ScoreTransform::SumProb => sum_prob(),
            ScoreTransform::SumLogprob => sum_logprob(),
            ScoreTransform::Thresholded { cap } => sum_prob().min(cap),
            ScoreTransform::Affine { a, b, base } => {
                let x = match base {
                    ScoreBase::SumProb => sum_prob(),
                    ScoreBase::SumLogprob => sum_logprob(),
                };
                a * x + b
            }
        }
    }
}

impl fmt::Display for ScoreTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreTransform::SumProb => write!(f, "sum_prob"),
            ScoreTransform::SumLogprob => write!(f, "sum_logprob"),
            ScoreTransform::Thresholded { cap } => write!(f, "thresholded:{cap}"),
            ScoreTransform::Affine { a, b, base: ScoreBase::SumProb } => write!(f, "affine:{a}:{b}"),
            ScoreTransform::Affine { a, b, base: ScoreBase::SumLogprob } => {
                write!(f, "affine_logprob:{a}:{b}")
            }
        }
    }
}

/// Accepts `sum_prob`, `sum_logprob`, `thresholded:CAP`, `affine:A:B` (over
/// the probability sum) and `affine_logprob:A:B`.
impl FromStr for ScoreTransform {
    type Err = RewardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RewardError::InvalidTransform(format!("cannot parse `{s}`"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let t = match parts.as_slice() {
            ["sum_prob"] => ScoreTransform::SumProb,
            ["sum_logprob"] => ScoreTransform::SumLogprob,
            ["thresholded", cap] => ScoreTransform::Thresholded { cap: num(cap)? },
            ["affine", a, b] => ScoreTransform::Affine {
                a: num(a)?,
                b: num(b)?,
                base: ScoreBase::SumProb,
            },
            ["affine_logprob", a, b] => ScoreTransform::Affine {
                a: num(a)?,
                b: num(b)?,
                base: ScoreBase::SumLogprob,
            },
            _ => return Err(bad()),
        };
        t.validate()?;
        Ok(t)
    }
}

/// Reduces the scoped log-probabilities of `scores` to a reward.
pub fn score(scores: &TokenScores, transform: ScoreTransform, scope: Scope) -> Result<f64, RewardError> {
    transform.validate()?;
    let scoped = match scope {
        Scope::CompletionOnly => &scores.logprobs[scores.completion_offset..],
        Scope::FullText => &scores.logprobs[..],
    };
    if scoped.is_empty() {
        return Err(RewardError::EmptyScope);
    }
    if scoped.iter().any(|l| !l.is_finite()) {
        return Err(RewardError::Misaligned("non-finite logprob".into()));
    }
    Ok(transform.apply(scoped))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardOptions {
    pub transform: ScoreTransform,
    pub scope: Scope,
    pub retry: RetryPolicy,
    /// Maximum concurrent backend requests in batch scoring.
    pub in_flight: usize,
}

impl Default for RewardOptions {
    fn default() -> Self {
        Self {
            transform: ScoreTransform::SumProb,
            scope: Scope::CompletionOnly,
            retry: RetryPolicy::default(),
            in_flight: 4,
        }
    }
}

fn reward_with_id<B: LogitBackend + ?Sized>(
    id: String,
    req: &RewardRequest,
    backend: &B,
    options: &RewardOptions,
) -> Result<f64, RewardError> {
    let text = compose_scoring_text(req)?;
    let request = LogitRequest::new(id, text.text.clone());
    let response = options
        .retry
        .call(backend, &request)
        .map_err(|(source, attempts)| RewardError::Backend { attempts, source })?;
    let scores = TokenScores::from_response(response, &text)?;
    score(&scores, options.transform, options.scope)
}

/// Scores one candidate.
pub fn reward_of<B: LogitBackend + ?Sized>(
    req: &RewardRequest,
    backend: &B,
    options: &RewardOptions,
) -> Result<f64, RewardError> {
    reward_with_id("req-0".into(), req, backend, options)
}

/// Scores candidates concurrently, at most `options.in_flight` at a time.
/// Results keep the input order; any failure fails the whole batch.
pub fn reward_batch<B: LogitBackend + ?Sized>(
    reqs: &[RewardRequest],
    backend: &B,
    options: &RewardOptions,
) -> Result<Vec<f64>, RewardError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.in_flight.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        reqs.par_iter()
            .enumerate()
            .map(|(i, r)| reward_with_id(format!("req-{i}"), r, backend, options))
            .collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ranked {
    /// Position in the candidate list.
    pub index: usize,
    pub reward: f64,
}

/// Orders rewards descending, lower index first on ties, and keeps `k`.
pub fn top_k(rewards: &[f64], k: usize) -> Result<Vec<Ranked>, RewardError> {
    if rewards.is_empty() || k == 0 || k > rewards.len() {
        return Err(RewardError::InvalidK { k, n: rewards.len() });
    }
    let mut ranked: Vec<Ranked> = rewards
        .iter()
        .enumerate()
        .map(|(index, &reward)| Ranked { index, reward })
        .collect();
    ranked.sort_by(|a, b| b.reward.total_cmp(&a.reward).then(a.index.cmp(&b.index)));
    ranked.truncate(k);
    Ok(ranked)
}

/// Scores every candidate and returns the `k` best.
pub fn best_of_n<B: LogitBackend + ?Sized>(
    candidates: &[RewardRequest],
    backend: &B,
    options: &RewardOptions,
    k: usize,
) -> Result<Vec<Ranked>, RewardError> {
    if candidates.is_empty() || k == 0 || k > candidates.len() {
        return Err(RewardError::InvalidK { k, n: candidates.len() });
    }
    top_k(&reward_batch(candidates, backend, options)?, k)
}
