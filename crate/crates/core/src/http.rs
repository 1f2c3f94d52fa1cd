//! Blocking JSON-over-HTTP with retry and exponential backoff, shared by the
//! remote embedding and chat providers.

use std::thread;
use std::time::Duration;

use log::warn;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("request to {url} failed after {attempts} attempt(s): {message}")]
    Transport {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("{url} returned HTTP {status}: {body}")]
    Status {
        url: String,
        status: u16,
        body: String,
    },
    #[error("response from {url} is not valid JSON: {message}")]
    Decode { url: String, message: String },
    #[error("environment variable {0} holding the API token is not set")]
    MissingToken(String),
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16))
    }
}

pub struct JsonClient {
    client: Client,
    url: String,
    bearer: Option<String>,
    retry: RetryPolicy,
}

impl JsonClient {
    pub fn new(
        url: &str,
        timeout: Duration,
        auth_token_env: Option<&str>,
        retry: RetryPolicy,
    ) -> Result<Self, HttpError> {
        let bearer = match auth_token_env {
            Some(var) if !var.is_empty() => match std::env::var(var) {
                Ok(token) => Some(token),
                Err(_) => return Err(HttpError::MissingToken(var.to_string())),
            },
            _ => None,
        };
        let client =
            Client::builder()
                .timeout(timeout)
                .build()
                .map_err(|e| HttpError::Transport {
                    url: url.to_string(),
                    attempts: 0,
                    message: e.to_string(),
                })?;
        Ok(Self {
            client,
            url: url.to_string(),
            bearer,
            retry,
        })
    }

    /// POSTs `body`, retrying on connection failures, 429 and 5xx responses.
    pub fn post(&self, body: &Value) -> Result<Value, HttpError> {
        let mut attempt = 0;
        loop {
            let mut req = self.client.post(&self.url).json(body);
            if let Some(token) = &self.bearer {
                req = req.bearer_auth(token);
            }
            let retryable = match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<Value>().map_err(|e| HttpError::Decode {
                            url: self.url.clone(),
                            message: e.to_string(),
                        });
                    }
                    let body = resp.text().unwrap_or_default();
                    if !is_retryable(status) || attempt >= self.retry.max_retries {
                        return Err(HttpError::Status {
                            url: self.url.clone(),
                            status: status.as_u16(),
                            body,
                        });
                    }
                    format!("HTTP {status}")
                }
                Err(e) => {
                    if attempt >= self.retry.max_retries {
                        return Err(HttpError::Transport {
                            url: self.url.clone(),
                            attempts: attempt + 1,
                            message: e.to_string(),
                        });
                    }
                    e.to_string()
                }
            };
            let delay = self.retry.delay(attempt);
            warn!(
                "{}: attempt {} failed ({retryable}); retrying in {delay:?}",
                self.url,
                attempt + 1
            );
            thread::sleep(delay);
            attempt += 1;
        }
    }
}

fn is_retryable(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error()
}
