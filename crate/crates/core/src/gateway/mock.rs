//! Deterministic in-process test double for both wire routes.
//!
//! Chat responses can be scripted (fixed completions or HTTP-style
//! failures); without a script the mock synthesizes a four-section
//! completion derived from a digest of the prompt, so distinct prompts get
//! distinct summaries. Embeddings are unit vectors derived from a SHA-256
//! digest of the input string: identical inputs embed identically.

use std::collections::VecDeque;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::wire::{
    ChatMessage, ChatRequest, ChatResponse, EmbeddingData, EmbeddingsRequest, EmbeddingsResponse,
    Usage,
};
use super::{BackendError, BackendResponse, Endpoint, InferenceBackend};
use crate::distill::estimate_tokens;
use crate::metrics::{ProviderError, TextEmbedder, TokenEmbedder};

#[derive(Debug, Clone)]
pub enum ChatStep {
    Respond(String),
    Fail(u16),
}

#[derive(Default)]
struct MockState {
    chat_script: VecDeque<ChatStep>,
    chat_requests: Vec<ChatRequest>,
    embeddings_requests: Vec<EmbeddingsRequest>,
}

pub struct MockBackend {
    state: Mutex<MockState>,
    context_window: usize,
    embedding_dim: usize,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl MockBackend {
    pub fn new() -> Self {
        Self {
            state: Mutex::new(MockState::default()),
            context_window: 8192,
            embedding_dim: 16,
        }
    }

    /// Declared context window in estimated tokens; requests whose prompt
    /// estimate plus `max_tokens` exceed it fail with a context overflow.
    pub fn with_context_window(mut self, tokens: usize) -> Self {
        self.context_window = tokens;
        self
    }

    pub fn with_embedding_dim(mut self, dim: usize) -> Self {
        self.embedding_dim = dim.max(1);
        self
    }

    /// Queue a fixed completion for the next chat request.
    pub fn script_completion(&self, text: impl Into<String>) {
        self.state
            .lock()
            .unwrap()
            .chat_script
            .push_back(ChatStep::Respond(text.into()));
    }

    /// Queue an HTTP-style failure (e.g. 503, 401) for the next chat
    /// request.
    pub fn script_failure(&self, status: u16) {
        self.state
            .lock()
            .unwrap()
            .chat_script
            .push_back(ChatStep::Fail(status));
    }

    pub fn chat_request_count(&self) -> usize {
        self.state.lock().unwrap().chat_requests.len()
    }

    pub fn embeddings_request_count(&self) -> usize {
        self.state.lock().unwrap().embeddings_requests.len()
    }

    pub fn recorded_chat_requests(&self) -> Vec<ChatRequest> {
        self.state.lock().unwrap().chat_requests.clone()
    }

    /// Byte length of the most recent embeddings input (single-input
    /// requests only).
    pub fn last_embeddings_input_len(&self) -> Option<usize> {
        let state = self.state.lock().unwrap();
        state
            .embeddings_requests
            .last()
            .map(|r| r.input.as_strings().iter().map(|s| s.len()).sum())
    }

    /// The deterministic unit vector this mock assigns to `input`.
    pub fn embedding_for(&self, input: &str) -> Vec<f64> {
        digest_embedding(input, self.embedding_dim)
    }

    fn default_completion(request: &ChatRequest) -> String {
        let user = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        let digest = Sha256::digest(user.as_bytes());
        let tag = hex::encode(digest);
        let tag = &tag[..12];
        format!(
            "Overview\n\
             Mock analysis {tag} of the submitted evidence.\n\
             Observed Behaviors\n\
             The trace contains the recorded events tagged {tag}.\n\
             Impact\n\
             Impact assessed by deterministic mock heuristic {tag}.\n\
             Recommended Actions\n\
             Review the indicators tagged {tag} and isolate affected hosts."
        )
    }
}

fn failure_for_status(status: u16) -> BackendError {
    match status {
        401 | 403 => BackendError::Auth(format!("http {status}")),
        429 | 500..=599 => BackendError::Transient(format!("http {status}")),
        _ => BackendError::InvalidRequest(format!("http {status}")),
    }
}

/// Map a SHA-256-derived byte stream to a unit vector of dimension `dim`.
pub fn digest_embedding(input: &str, dim: usize) -> Vec<f64> {
    let mut bytes = Vec::with_capacity(dim * 2);
    let mut block = Sha256::digest(input.as_bytes());
    while bytes.len() < dim * 2 {
        bytes.extend_from_slice(&block);
        block = Sha256::digest(&block);
    }
    let mut values: Vec<f64> = (0..dim)
        .map(|i| {
            let hi = bytes[2 * i] as i32;
            let lo = bytes[2 * i + 1] as i32;
            (((hi << 8) | lo) - 32768) as f64
        })
        .collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        values[0] = 1.0;
    } else {
        for value in &mut values {
            *value /= norm;
        }
    }
    values
}

impl InferenceBackend for MockBackend {
    fn chat(
        &self,
        _endpoint: &Endpoint,
        request: &ChatRequest,
    ) -> Result<BackendResponse<ChatResponse>, BackendError> {
        let mut state = self.state.lock().unwrap();
        state.chat_requests.push(request.clone());

        let prompt_estimate: usize = request
            .messages
            .iter()
            .map(|m| estimate_tokens(&m.content))
            .sum();
        if prompt_estimate + request.max_tokens as usize > self.context_window {
            return Err(BackendError::ContextOverflow(format!(
                "prompt estimate {prompt_estimate} + max_tokens {} exceeds window {}",
                request.max_tokens, self.context_window
            )));
        }

        let completion = match state.chat_script.pop_front() {
            Some(ChatStep::Respond(text)) => text,
            Some(ChatStep::Fail(status)) => return Err(failure_for_status(status)),
            None => Self::default_completion(request),
        };
        let usage = Usage {
            prompt_tokens: prompt_estimate as u32,
            completion_tokens: estimate_tokens(&completion) as u32,
        };
        Ok(BackendResponse {
            body: ChatResponse {
                choices: vec![super::wire::ChatChoice {
                    message: ChatMessage {
                        role: "assistant".into(),
                        content: completion,
                    },
                }],
                usage: Some(usage),
            },
            latency_ms: 0,
        })
    }

    fn embeddings(
        &self,
        _endpoint: &Endpoint,
        request: &EmbeddingsRequest,
    ) -> Result<BackendResponse<EmbeddingsResponse>, BackendError> {
        let mut state = self.state.lock().unwrap();
        state.embeddings_requests.push(request.clone());
        let data = request
            .input
            .as_strings()
            .iter()
            .enumerate()
            .map(|(index, input)| EmbeddingData {
                index: Some(index),
                embedding: digest_embedding(input, self.embedding_dim),
            })
            .collect();
        Ok(BackendResponse {
            body: EmbeddingsResponse { data },
            latency_ms: 0,
        })
    }
}

// The mock doubles as a direct metric embedder so metric tests and offline
// evaluation need no gateway plumbing.
impl TokenEmbedder<f64> for MockBackend {
    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Ok(tokens
            .iter()
            .map(|t| digest_embedding(t, self.embedding_dim))
            .collect())
    }
}

impl TextEmbedder<f64> for MockBackend {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(digest_embedding(text, self.embedding_dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_embeddings_are_deterministic_unit_vectors() {
        let a = digest_embedding("sample", 16);
        let b = digest_embedding("sample", 16);
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn digest_embedding_supports_large_dimensions() {
        let v = digest_embedding("sample", 64);
        assert_eq!(v.len(), 64);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn default_completion_varies_with_prompt() {
        let request = |content: &str| ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage::user(content)],
            temperature: 0.0,
            max_tokens: 16,
        };
        let a = MockBackend::default_completion(&request("first evidence"));
        let b = MockBackend::default_completion(&request("second evidence"));
        assert_ne!(a, b);
        assert!(a.contains("Overview"));
        assert!(a.contains("Recommended Actions"));
    }
}
