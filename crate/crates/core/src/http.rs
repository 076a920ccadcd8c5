//! Blocking JSON-over-HTTP with bounded retries and exponential backoff.

use std::thread;
use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use tracing::debug;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total attempts, including the first one.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub request_timeout_secs: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, base_delay_ms: 500, request_timeout_secs: 60 }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("{url}: unreachable after {attempts} attempt(s): {last}")]
    Unreachable { url: String, attempts: u32, last: String },
    #[error("{url}: HTTP {status} after {attempts} attempt(s): {body}")]
    Status { url: String, status: u16, attempts: u32, body: String },
    #[error("{url}: authentication failed (HTTP {status})")]
    Auth { url: String, status: u16 },
    #[error("{url}: malformed response: {reason}")]
    Decode { url: String, reason: String },
    #[error("cannot build HTTP client: {0}")]
    Client(String),
}

pub fn build_client(policy: &RetryPolicy) -> Result<Client, HttpError> {
    Client::builder()
        .timeout(Duration::from_secs(policy.request_timeout_secs))
        .build()
        .map_err(|e| HttpError::Client(e.to_string()))
}

fn retryable(status: StatusCode) -> bool {
    status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::REQUEST_TIMEOUT
}

fn send_with_retry(
    url: &str,
    policy: &RetryPolicy,
    make: impl Fn() -> RequestBuilder,
) -> Result<Json, HttpError> {
    let attempts = policy.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            thread::sleep(policy.delay(attempt - 1));
        }
        match make().send() {
            Ok(resp) => {
                let status = resp.status();
                if status.is_success() {
                    return resp.json::<Json>().map_err(|e| HttpError::Decode { url: url.to_string(), reason: e.to_string() });
                }
                if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
                    return Err(HttpError::Auth { url: url.to_string(), status: status.as_u16() });
                }
                let body = resp.text().unwrap_or_default();
                if !retryable(status) || attempt + 1 == attempts {
                    return Err(HttpError::Status { url: url.to_string(), status: status.as_u16(), attempts: attempt + 1, body });
                }
                debug!(%url, status = status.as_u16(), attempt, "retrying");
            }
            Err(e) => {
                last = e.to_string();
                debug!(%url, error = %last, attempt, "transport error; retrying");
            }
        }
    }
    Err(HttpError::Unreachable { url: url.to_string(), attempts, last })
}

pub fn post_json(
    client: &Client,
    url: &str,
    body: &Json,
    bearer: Option<&str>,
    policy: &RetryPolicy,
) -> Result<Json, HttpError> {
    send_with_retry(url, policy, || {
        let req = client.post(url).json(body);
        match bearer {
            Some(token) => req.bearer_auth(token),
            None => req,
        }
    })
}

pub fn get_json(client: &Client, url: &str, policy: &RetryPolicy) -> Result<Json, HttpError> {
    send_with_retry(url, policy, || client.get(url))
}

pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
