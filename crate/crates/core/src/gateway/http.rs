//! Blocking HTTP backend speaking the OpenAI-compatible wire protocol.

use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{ChatRequest, ChatResponse, EmbeddingsRequest, EmbeddingsResponse};
use super::{BackendError, BackendResponse, Endpoint, GatewayError, InferenceBackend};

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    /// Build a client whose wire calls all carry `timeout`.
    pub fn new(timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::EndpointUnreachable(format!("client setup: {e}")))?;
        Ok(Self { client })
    }

    pub fn with_default_timeout() -> Result<Self, GatewayError> {
        Self::new(DEFAULT_TIMEOUT)
    }

    fn post_json<T: Serialize, R: DeserializeOwned>(
        &self,
        endpoint: &Endpoint,
        path: &str,
        body: &T,
    ) -> Result<BackendResponse<R>, BackendError> {
        let url = format!("{}{}", endpoint.url.trim_end_matches('/'), path);
        let started = Instant::now();
        let mut request = self.client.post(&url).json(body);
        if let Some(key) = &endpoint.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Transient(format!("timeout: {e}"))
            } else {
                BackendError::Unreachable(e.to_string())
            }
        })?;
        let latency_ms = started.elapsed().as_millis() as u64;
        let status = response.status();
        if status.is_success() {
            let parsed = response
                .json::<R>()
                .map_err(|e| BackendError::Malformed(e.to_string()))?;
            return Ok(BackendResponse {
                body: parsed,
                latency_ms,
            });
        }

        let body_text = truncate(&response.text().unwrap_or_default());
        Err(match status.as_u16() {
            401 | 403 => BackendError::Auth(format!("http {status}: {body_text}")),
            429 | 500..=599 => BackendError::Transient(format!("http {status}: {body_text}")),
            400 if mentions_context_overflow(&body_text) => {
                BackendError::ContextOverflow(body_text)
            }
            404 => BackendError::Unreachable(format!("http 404 at {url}: {body_text}")),
            _ => BackendError::InvalidRequest(format!("http {status}: {body_text}")),
        })
    }
}

fn mentions_context_overflow(body: &str) -> bool {
    let lower = body.to_lowercase();
    lower.contains("context_length")
        || lower.contains("context length")
        || lower.contains("maximum context")
}

fn truncate(text: &str) -> String {
    const LIMIT: usize = 300;
    if text.len() <= LIMIT {
        text.to_string()
    } else {
        let mut end = LIMIT;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &text[..end])
    }
}

impl InferenceBackend for HttpBackend {
    fn chat(
        &self,
        endpoint: &Endpoint,
        request: &ChatRequest,
    ) -> Result<BackendResponse<ChatResponse>, BackendError> {
        self.post_json(endpoint, "/v1/chat/completions", request)
    }

    fn embeddings(
        &self,
        endpoint: &Endpoint,
        request: &EmbeddingsRequest,
    ) -> Result<BackendResponse<EmbeddingsResponse>, BackendError> {
        self.post_json(endpoint, "/v1/embeddings", request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_overflow_detection() {
        assert!(mentions_context_overflow(
            r#"{"error": {"code": "context_length_exceeded"}}"#
        ));
        assert!(mentions_context_overflow(
            "This model's maximum context length is 4096 tokens"
        ));
        assert!(!mentions_context_overflow("bad request"));
    }

    #[test]
    fn truncate_respects_char_boundaries() {
        let text = "é".repeat(400);
        let cut = truncate(&text);
        assert!(cut.len() <= 304);
        assert!(cut.ends_with('…'));
    }
}
