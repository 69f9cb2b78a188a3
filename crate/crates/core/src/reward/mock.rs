use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use super::backend::{BackendError, LogitBackend, LogitRequest, LogitResponse};

/// Splits text into runs of word characters and single punctuation marks,
/// returning `(token, start character index)`.
pub fn mock_tokenize(text: &str) -> Vec<(String, usize)> {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    let mut out = Vec::new();
    let mut current: Option<(String, usize)> = None;
    for (i, c) in text.chars().enumerate() {
        if is_word(c) {
            match &mut current {
                Some((s, _)) => s.push(c),
                None => current = Some((c.to_string(), i)),
            }
            continue;
        }
        out.extend(current.take());
        if !c.is_whitespace() {
            out.push((c.to_string(), i));
        }
    }
    out.extend(current);
    out
}

type TokenProb = dyn Fn(&str, usize) -> f64 + Send + Sync;

#[derive(Clone)]
enum Rule {
    Fixed(f64),
    Custom(Arc<TokenProb>),
    Unreachable,
}

/// Deterministic in-process backend.
#[derive(Clone)]
pub struct MockBackend {
    rule: Rule,
    failures_left: Arc<AtomicU32>,
    calls: Arc<AtomicU32>,
}

impl std::fmt::Debug for MockBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rule = match &self.rule {
            Rule::Fixed(p) => format!("fixed({p})"),
            Rule::Custom(_) => "custom".into(),
            Rule::Unreachable => "unreachable".into(),
        };
        f.debug_struct("MockBackend").field("rule", &rule).finish()
    }
}

impl MockBackend {
    fn with_rule(rule: Rule) -> Self {
        Self {
            rule,
            failures_left: Arc::new(AtomicU32::new(0)),
            calls: Arc::new(AtomicU32::new(0)),
        }
    }

    /// Every token gets probability `p`.
    pub fn fixed(p: f64) -> Self {
        assert!(p > 0.0 && p <= 1.0, "probability {p} outside (0, 1]");
        Self::with_rule(Rule::Fixed(p))
    }

    /// Probability `1 - 1 / (len + 1)` for a token of `len` characters, so
    /// longer tokens score higher.
    pub fn length_keyed() -> Self {
        Self::custom(|tok, _| {
            let len = tok.chars().count() as f64;
            1.0 - 1.0 / (len + 1.0)
        })
    }

    /// Probability from `f(token, token index)`; values are clamped into
    /// `[1e-12, 1]`.
    pub fn custom(f: impl Fn(&str, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self::with_rule(Rule::Custom(Arc::new(f)))
    }

    /// Tokens equal to one of `words` (case-insensitive) get `hit`, all others `miss`.
    pub fn keyword(words: &[&str], hit: f64, miss: f64) -> Self {
        let words: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        Self::custom(move |tok, _| {
            if words.iter().any(|w| *w == tok.to_lowercase()) {
                hit
            } else {
                miss
            }
        })
    }

    /// Fails every call.
    pub fn unreachable() -> Self {
        Self::with_rule(Rule::Unreachable)
    }

    /// Makes the next `n` calls fail before the backend answers normally.
    pub fn failing_first(self, n: u32) -> Self {
        self.failures_left.store(n, Ordering::SeqCst);
        self
    }

    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LogitBackend for MockBackend {
    fn logprobs(&self, request: &LogitRequest) -> Result<LogitResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let failing = self
            .failures_left
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
        if failing || matches!(self.rule, Rule::Unreachable) {
            return Err(BackendError::Unavailable("mock backend refused the call".into()));
        }
        let toks = mock_tokenize(&request.text);
        let logprobs = toks
            .iter()
            .enumerate()
            .map(|(i, (t, _))| match &self.rule {
                Rule::Fixed(p) => p.ln(),
                Rule::Custom(f) => f(t, i).clamp(1e-12, 1.0).ln(),
                Rule::Unreachable => unreachable!(),
            })
            .collect();
        let (tokens, offsets) = toks.into_iter().unzip();
        Ok(LogitResponse {
            id: request.id.clone(),
            tokens,
            logprobs,
            offsets,
        })
    }
}
