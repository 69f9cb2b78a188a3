use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Request body sent to a log-probability backend.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogitRequest {
    pub id: String,
    pub text: String,
    pub echo_tokens: bool,
}

impl LogitRequest {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            echo_tokens: true,
        }
    }
}

/// Per-token natural-log probabilities of `text` under the backend's model.
/// `offsets[i]` is the character (not byte) index where token `i` starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitResponse {
    pub id: String,
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
    pub offsets: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Anything that returns per-token log-probabilities for a text.
pub trait LogitBackend: Sync {
    fn logprobs(&self, request: &LogitRequest) -> Result<LogitResponse, BackendError>;
}

impl<B: LogitBackend + ?Sized> LogitBackend for &B {
    fn logprobs(&self, request: &LogitRequest) -> Result<LogitResponse, BackendError> {
        (**self).logprobs(request)
    }
}

impl<B: LogitBackend + ?Sized + Send> LogitBackend for Box<B> {
    fn logprobs(&self, request: &LogitRequest) -> Result<LogitResponse, BackendError> {
        (**self).logprobs(request)
    }
}

/// Largest log-probability accepted before warning that a backend does not
/// return normalized per-position distributions.
pub const NORMALIZATION_SLACK: f64 = 1e-3;

/// Checks shape and alignment of a response against its request.
pub fn check_response(request: &LogitRequest, response: &LogitResponse) -> Result<(), BackendError> {
    let bad = |msg: String| Err(BackendError::Protocol(msg));
    if response.id != request.id {
        return bad(format!("response id `{}` for request `{}`", response.id, request.id));
    }
    let n = response.tokens.len();
    if response.logprobs.len() != n || response.offsets.len() != n {
        return bad(format!(
            "{} tokens, {} logprobs, {} offsets",
            n,
            response.logprobs.len(),
            response.offsets.len()
        ));
    }
    let len = request.text.chars().count();
    if response.offsets.windows(2).any(|w| w[0] > w[1]) {
        return bad("offsets are not sorted".into());
    }
    if let Some(&last) = response.offsets.last() {
        if last > len {
            return bad(format!("offset {last} past end of {len}-character text"));
        }
    }
    if let Some(i) = response.logprobs.iter().position(|l| !l.is_finite()) {
        return bad(format!("non-finite logprob at token {i}"));
    }
    // only the chosen token's log-probability comes back, so the best check
    // available is that it is a log of a probability
    if let Some((i, l)) = response
        .logprobs
        .iter()
        .enumerate()
        .find(|(_, l)| **l > NORMALIZATION_SLACK)
    {
        log::warn!(
            "request `{}`: logprob {l} at token {i} is positive; backend output looks unnormalized",
            request.id
        );
    }
    Ok(())
}

/// Bounded retry with exponential backoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts.
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    /// Calls the backend until it succeeds, returning the last error and the
    /// number of attempts made otherwise. Protocol errors are not retried.
    pub fn call<B: LogitBackend + ?Sized>(
        &self,
        backend: &B,
        request: &LogitRequest,
    ) -> Result<LogitResponse, (BackendError, u32)> {
        let attempts = self.attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = backend
                .logprobs(request)
                .and_then(|r| check_response(request, &r).map(|_| r));
            match result {
                Ok(r) => return Ok(r),
                Err(e @ BackendError::Protocol(_)) => return Err((e, attempt)),
                Err(e) if attempt >= attempts => return Err((e, attempt)),
                Err(e) => {
                    log::debug!("request `{}` attempt {attempt} failed: {e}", request.id);
                    thread::sleep(self.base_delay * 2u32.pow(attempt - 1));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(tokens: &[&str], logprobs: &[f64], offsets: &[usize]) -> LogitResponse {
        LogitResponse {
            id: "r".into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            logprobs: logprobs.to_vec(),
            offsets: offsets.to_vec(),
        }
    }

    #[test]
    fn wire_format() {
        let req = LogitRequest::new("r", "a b");
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"r","text":"a b","echo_tokens":true}"#
        );
        let resp: LogitResponse =
            serde_json::from_str(r#"{"id":"r","tokens":["a","b"],"logprobs":[-0.5,-1.0],"offsets":[0,2]}"#)
                .unwrap();
        check_response(&req, &resp).unwrap();
    }

    #[test]
    fn rejects_misaligned() {
        let req = LogitRequest::new("r", "a b");
        for resp in [
            response(&["a", "b"], &[-1.0], &[0, 2]),
            response(&["a", "b"], &[-1.0, -1.0], &[2, 0]),
            response(&["a", "b"], &[-1.0, -1.0], &[0, 9]),
            response(&["a", "b"], &[-1.0, f64::NAN], &[0, 2]),
        ] {
            assert!(matches!(check_response(&req, &resp), Err(BackendError::Protocol(_))));
        }
        let mut other = response(&["a"], &[-1.0], &[0]);
        other.id = "q".into();
        assert!(check_response(&req, &other).is_err());
    }
}
