//! Client for OpenAI-compatible chat-completion and embeddings endpoints,
//! with retries, timeouts, a bounded in-flight limit, and a deterministic
//! offline mock for tests.

pub mod http;
pub mod mock;
pub mod wire;

pub use http::HttpBackend;
pub use mock::MockBackend;
pub use wire::{
    ChatMessage, ChatRequest, ChatResponse, EmbeddingsInput, EmbeddingsRequest,
    EmbeddingsResponse, Usage,
};

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ProviderError, TextEmbedder, TokenEmbedder};

/// API key wrapper whose `Debug` output is redacted.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ApiKey(***)")
    }
}

/// Pass-through metadata recording how the serving endpoint quantizes
/// weights; never executed locally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizationHint {
    None,
    Int4Fp16,
}

impl QuantizationHint {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuantizationHint::None => "none",
            QuantizationHint::Int4Fp16 => "int4_fp16",
        }
    }
}

/// One servable model behind an OpenAI-compatible endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub model_name: String,
    pub endpoint_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<ApiKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantization_hint: Option<QuantizationHint>,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_max_output_tokens() -> u32 {
    1024
}

fn default_temperature() -> f64 {
    0.2
}

impl ModelProfile {
    /// A profile for the offline mock backend.
    pub fn offline(model_name: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            endpoint_url: "mock://offline".into(),
            api_key: None,
            quantization_hint: None,
            max_output_tokens: default_max_output_tokens(),
            temperature: default_temperature(),
        }
    }

    /// Check the profile invariants; the message names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.model_name.trim().is_empty() {
            return Err("profile.model_name must be non-empty".into());
        }
        if self.endpoint_url.trim().is_empty() {
            return Err("profile.endpoint_url must be non-empty".into());
        }
        if self.max_output_tokens == 0 {
            return Err("profile.max_output_tokens must be positive".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err("profile.temperature must lie in [0, 2]".into());
        }
        Ok(())
    }
}

/// Connection coordinates extracted from a profile.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub url: String,
    pub api_key: Option<String>,
}

impl Endpoint {
    pub fn from_profile(profile: &ModelProfile) -> Self {
        Self {
            url: profile.endpoint_url.trim_end_matches('/').to_string(),
            api_key: profile.api_key.as_ref().map(|k| k.expose().to_string()),
        }
    }
}

/// One completed chat round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatExchange {
    pub system_prompt: String,
    pub user_prompt: String,
    pub completion_text: String,
    /// (prompt, completion) token counts when the endpoint reported them.
    pub usage_tokens: Option<(u32, u32)>,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// A fixed-dimension embedding with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub dimension: usize,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, GatewayError> {
        if values.is_empty() {
            return Err(GatewayError::MalformedResponse(
                "endpoint returned an empty embedding".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GatewayError::MalformedResponse(
                "endpoint returned a non-finite embedding component".into(),
            ));
        }
        let dimension = values.len();
        Ok(Self { values, dimension })
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    /// Network-level failure; check connectivity and the endpoint URL.
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    /// The endpoint rejected the credentials; check the API key.
    #[error("authentication failed: {0}")]
    AuthFailed(String),
    /// The endpoint reported the request exceeds its context window;
    /// lower the distillation budget or max_output_tokens.
    #[error("context window exceeded: {0}")]
    ContextOverflow(String),
    /// Transient failures persisted through every retry.
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
}

/// Backend-level failure classification; the gateway decides retries.
#[derive(Debug, Clone)]
pub enum BackendError {
    /// HTTP 429/5xx or a timeout; retryable.
    Transient(String),
    /// Connection-level failure; retryable.
    Unreachable(String),
    Auth(String),
    ContextOverflow(String),
    InvalidRequest(String),
    Malformed(String),
}

impl BackendError {
    fn retryable(&self) -> bool {
        matches!(
            self,
            BackendError::Transient(_) | BackendError::Unreachable(_)
        )
    }
}

/// A response plus the wire latency the backend observed.
#[derive(Debug, Clone)]
pub struct BackendResponse<T> {
    pub body: T,
    pub latency_ms: u64,
}

/// The wire surface the gateway drives: real HTTP or the in-process mock.
pub trait InferenceBackend: Send + Sync {
    fn chat(
        &self,
        endpoint: &Endpoint,
        request: &ChatRequest,
    ) -> Result<BackendResponse<ChatResponse>, BackendError>;

    fn embeddings(
        &self,
        endpoint: &Endpoint,
        request: &EmbeddingsRequest,
    ) -> Result<BackendResponse<EmbeddingsResponse>, BackendError>;
}

impl<B: InferenceBackend + ?Sized> InferenceBackend for &B {
    fn chat(
        &self,
        endpoint: &Endpoint,
        request: &ChatRequest,
    ) -> Result<BackendResponse<ChatResponse>, BackendError> {
        (**self).chat(endpoint, request)
    }

    fn embeddings(
        &self,
        endpoint: &Endpoint,
        request: &EmbeddingsRequest,
    ) -> Result<BackendResponse<EmbeddingsResponse>, BackendError> {
        (**self).embeddings(endpoint, request)
    }
}

impl InferenceBackend for Box<dyn InferenceBackend> {
    fn chat(
        &self,
        endpoint: &Endpoint,
        request: &ChatRequest,
    ) -> Result<BackendResponse<ChatResponse>, BackendError> {
        self.as_ref().chat(endpoint, request)
    }

    fn embeddings(
        &self,
        endpoint: &Endpoint,
        request: &EmbeddingsRequest,
    ) -> Result<BackendResponse<EmbeddingsResponse>, BackendError> {
        self.as_ref().embeddings(endpoint, request)
    }
}

/// Retry schedule: exponential backoff with proportional jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    /// Proportional jitter, e.g. 0.2 for ±20%.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base_ms: 500,
            jitter: 0.2,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        let exponent = attempt.saturating_sub(1).min(16);
        let base = self.backoff_base_ms.saturating_mul(1u64 << exponent);
        let factor = if self.jitter > 0.0 {
            1.0 + rand::rng().random_range(-self.jitter..=self.jitter)
        } else {
            1.0
        };
        Duration::from_millis((base as f64 * factor).max(0.0).round() as u64)
    }
}

/// Counting semaphore bounding concurrent wire calls.
struct InFlightLimiter {
    available: Mutex<usize>,
    signal: Condvar,
}

impl InFlightLimiter {
    fn new(permits: usize) -> Self {
        Self {
            available: Mutex::new(permits.max(1)),
            signal: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.signal.wait(available).unwrap();
        }
        *available -= 1;
        InFlightPermit { limiter: self }
    }
}

struct InFlightPermit<'a> {
    limiter: &'a InFlightLimiter,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut available = self.limiter.available.lock().unwrap();
        *available += 1;
        self.limiter.signal.notify_one();
    }
}

/// Gateway over one backend. Callers may share it across threads; per-call
/// state is isolated and the in-flight limit bounds concurrency.
pub struct Gateway<B> {
    backend: B,
    retry: RetryPolicy,
    limiter: InFlightLimiter,
    embed_batch_limit: usize,
}

impl<B: InferenceBackend> Gateway<B> {
    pub fn new(backend: B) -> Self {
        Self {
            backend,
            retry: RetryPolicy::default(),
            limiter: InFlightLimiter::new(4),
            embed_batch_limit: 128,
        }
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(mut self, permits: usize) -> Self {
        self.limiter = InFlightLimiter::new(permits);
        self
    }

    pub fn with_embed_batch_limit(mut self, limit: usize) -> Self {
        self.embed_batch_limit = limit.max(1);
        self
    }

    /// Request one chat completion and return the first choice text.
    pub fn complete(
        &self,
        profile: &ModelProfile,
        system_prompt: &str,
        user_prompt: &str,
    ) -> Result<ChatExchange, GatewayError> {
        profile.validate().map_err(GatewayError::InvalidInput)?;
        if system_prompt.trim().is_empty() || user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidInput(
                "prompts must be non-empty".into(),
            ));
        }
        let request = ChatRequest {
            model: profile.model_name.clone(),
            messages: vec![
                ChatMessage::system(system_prompt),
                ChatMessage::user(user_prompt),
            ],
            temperature: profile.temperature,
            max_tokens: profile.max_output_tokens,
        };
        let endpoint = Endpoint::from_profile(profile);
        let _permit = self.limiter.acquire();
        let (response, attempts) = self.with_retries(|| self.backend.chat(&endpoint, &request))?;
        let first = response
            .body
            .choices
            .first()
            .ok_or_else(|| GatewayError::MalformedResponse("no choices in response".into()))?;
        Ok(ChatExchange {
            system_prompt: system_prompt.to_string(),
            user_prompt: user_prompt.to_string(),
            completion_text: first.message.content.clone(),
            usage_tokens: response
                .body
                .usage
                .map(|u| (u.prompt_tokens, u.completion_tokens)),
            latency_ms: response.latency_ms,
            attempts,
        })
    }

    /// Embed each token independently, batching requests to the configured
    /// limit. Vectors come back in input order with equal dimensions.
    pub fn embed_tokens(
        &self,
        profile: &ModelProfile,
        tokens: &[String],
    ) -> Result<Vec<EmbeddingVector>, GatewayError> {
        profile.validate().map_err(GatewayError::InvalidInput)?;
        if tokens.is_empty() {
            return Err(GatewayError::InvalidInput("no tokens to embed".into()));
        }
        if let Some(position) = tokens.iter().position(|t| t.trim().is_empty()) {
            return Err(GatewayError::InvalidInput(format!(
                "empty token at position {position}"
            )));
        }
        let endpoint = Endpoint::from_profile(profile);
        let mut vectors = Vec::with_capacity(tokens.len());
        for chunk in tokens.chunks(self.embed_batch_limit) {
            let request = EmbeddingsRequest {
                model: profile.model_name.clone(),
                input: EmbeddingsInput::Batch(chunk.to_vec()),
            };
            let _permit = self.limiter.acquire();
            let (response, _) =
                self.with_retries(|| self.backend.embeddings(&endpoint, &request))?;
            let embeddings = response.body.ordered_embeddings();
            if embeddings.len() != chunk.len() {
                return Err(GatewayError::MalformedResponse(format!(
                    "asked for {} embeddings, got {}",
                    chunk.len(),
                    embeddings.len()
                )));
            }
            for values in embeddings {
                vectors.push(EmbeddingVector::new(values)?);
            }
        }
        let dimension = vectors[0].dimension;
        if vectors.iter().any(|v| v.dimension != dimension) {
            return Err(GatewayError::MalformedResponse(
                "embedding dimensions differ across tokens".into(),
            ));
        }
        Ok(vectors)
    }

    /// Embed a whole text as one vector in a single request.
    pub fn embed_text(
        &self,
        profile: &ModelProfile,
        text: &str,
    ) -> Result<EmbeddingVector, GatewayError> {
        profile.validate().map_err(GatewayError::InvalidInput)?;
        if text.trim().is_empty() {
            return Err(GatewayError::InvalidInput("text must be non-empty".into()));
        }
        let endpoint = Endpoint::from_profile(profile);
        let request = EmbeddingsRequest {
            model: profile.model_name.clone(),
            input: EmbeddingsInput::Single(text.to_string()),
        };
        let _permit = self.limiter.acquire();
        let (response, _) = self.with_retries(|| self.backend.embeddings(&endpoint, &request))?;
        let mut embeddings = response.body.ordered_embeddings();
        if embeddings.len() != 1 {
            return Err(GatewayError::MalformedResponse(format!(
                "asked for 1 embedding, got {}",
                embeddings.len()
            )));
        }
        EmbeddingVector::new(embeddings.remove(0))
    }

    fn with_retries<T>(
        &self,
        call: impl Fn() -> Result<T, BackendError>,
    ) -> Result<(T, u32), GatewayError> {
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match call() {
                Ok(value) => return Ok((value, attempt)),
                Err(error) => {
                    if error.retryable() && attempt < max_attempts {
                        std::thread::sleep(self.retry.backoff(attempt));
                        continue;
                    }
                    return Err(match error {
                        BackendError::Transient(last) => GatewayError::RetriesExhausted {
                            attempts: attempt,
                            last,
                        },
                        BackendError::Unreachable(message) => {
                            GatewayError::EndpointUnreachable(if attempt > 1 {
                                format!("{message} (after {attempt} attempts)")
                            } else {
                                message
                            })
                        }
                        BackendError::Auth(message) => GatewayError::AuthFailed(message),
                        BackendError::ContextOverflow(message) => {
                            GatewayError::ContextOverflow(message)
                        }
                        BackendError::InvalidRequest(message) => {
                            GatewayError::InvalidInput(message)
                        }
                        BackendError::Malformed(message) => {
                            GatewayError::MalformedResponse(message)
                        }
                    });
                }
            }
        }
    }
}

/// Adapter exposing a gateway + profile pair as the metric embedders.
pub struct EmbeddingProvider<'a, B> {
    gateway: &'a Gateway<B>,
    profile: &'a ModelProfile,
}

impl<'a, B: InferenceBackend> EmbeddingProvider<'a, B> {
    pub fn new(gateway: &'a Gateway<B>, profile: &'a ModelProfile) -> Self {
        Self { gateway, profile }
    }
}

impl<B: InferenceBackend> TokenEmbedder<f64> for EmbeddingProvider<'_, B> {
    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        self.gateway
            .embed_tokens(self.profile, tokens)
            .map(|vectors| vectors.into_iter().map(|v| v.values).collect())
            .map_err(|e| ProviderError(e.to_string()))
    }
}

impl<B: InferenceBackend> TextEmbedder<f64> for EmbeddingProvider<'_, B> {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.gateway
            .embed_text(self.profile, text)
            .map(|v| v.values)
            .map_err(|e| ProviderError(e.to_string()))
    }
}

#[cfg(test)]
pub(crate) fn test_retry_policy() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        backoff_base_ms: 1,
        jitter: 0.0,
    }
}
