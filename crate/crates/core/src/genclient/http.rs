//! HTTP client for the `/generate` protocol.

use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use super::{strip_prompt, GenError, GenerationBackend, GenerationRequest};

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// A remote generation backend.
#[derive(Debug, Clone)]
pub struct BackendHandle {
    pub endpoint: String,
    pub model_tag: String,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First retry delay; each further retry doubles it.
    pub backoff: Duration,
    client: Client,
}

/// Serializable settings for a [`BackendHandle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub endpoint: String,
    pub model_tag: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

enum Failure {
    Transient(String),
    Timeout,
    Fatal(GenError),
}

impl BackendHandle {
    pub fn new(endpoint: &str, model_tag: &str, timeout: Duration, max_retries: u32) -> Result<Self, GenError> {
        super::store::check_tag(model_tag).map_err(|e| GenError::InvalidBackend(e.to_string()))?;
        if timeout.is_zero() {
            return Err(GenError::InvalidBackend("timeout must be positive".into()));
        }
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GenError::InvalidBackend(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model_tag: model_tag.to_string(),
            timeout,
            max_retries,
            backoff: Duration::from_millis(default_backoff_ms()),
            client,
        })
    }

    pub fn from_spec(spec: &BackendSpec) -> Result<Self, GenError> {
        Ok(Self::new(
            &spec.endpoint,
            &spec.model_tag,
            Duration::from_millis(spec.timeout_ms),
            spec.max_retries,
        )?
        .with_backoff(Duration::from_millis(spec.backoff_ms)))
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn once(&self, req: &GenerationRequest) -> Result<String, Failure> {
        let url = format!("{}/generate", self.endpoint);
        let resp = self.client.post(&url).json(req).send().map_err(|e| {
            if e.is_timeout() {
                Failure::Timeout
            } else {
                Failure::Transient(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(Failure::Transient(format!("status {status}")));
        }
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                Failure::Timeout
            } else {
                Failure::Transient(e.to_string())
            }
        })?;
        if !status.is_success() {
            return Err(Failure::Fatal(GenError::Status {
                status: status.as_u16(),
                body,
            }));
        }
        let parsed: GenerateResponse =
            serde_json::from_str(&body).map_err(|e| Failure::Fatal(GenError::MalformedResponse(e.to_string())))?;
        Ok(parsed.text)
    }

    /// Sends one request, retrying transport failures, timeouts and 5xx
    /// answers up to `max_retries` times with exponential backoff.
    pub fn generate_raw(&self, req: &GenerationRequest) -> Result<String, GenError> {
        req.validate()?;
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let failure = match self.once(req) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(f) => f,
            };
            if attempt > self.max_retries {
                return Err(match failure {
                    Failure::Timeout => GenError::Timeout {
                        endpoint: self.endpoint.clone(),
                        attempts: attempt,
                    },
                    Failure::Transient(reason) => GenError::BackendUnreachable {
                        endpoint: self.endpoint.clone(),
                        attempts: attempt,
                        reason,
                    },
                    Failure::Fatal(e) => e,
                });
            }
            std::thread::sleep(delay);
            delay = delay.saturating_mul(2);
        }
    }
}

impl GenerationBackend for BackendHandle {
    fn model_tag(&self) -> &str {
        &self.model_tag
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String, GenError> {
        let raw = self.generate_raw(req)?;
        Ok(strip_prompt(&req.prompt, &raw).to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genclient::DecodingParams;

    #[test]
    fn handle_invariants() {
        assert!(BackendHandle::new("http://127.0.0.1:1", "", Duration::from_secs(1), 0).is_err());
        assert!(BackendHandle::new("http://127.0.0.1:1", "m", Duration::ZERO, 0).is_err());
        let h = BackendHandle::new("http://127.0.0.1:1/", "m", Duration::from_secs(1), 0).unwrap();
        assert_eq!(h.endpoint, "http://127.0.0.1:1");
    }

    #[test]
    fn unreachable_after_retries() {
        // port 1 on loopback refuses connections
        let h = BackendHandle::new("http://127.0.0.1:1", "m", Duration::from_secs(2), 2)
            .unwrap()
            .with_backoff(Duration::from_millis(1));
        let err = h.generate(&DecodingParams::default().request("p", 1)).unwrap_err();
        assert!(matches!(err, GenError::BackendUnreachable { attempts: 3, .. }), "{err:?}");
    }
}
