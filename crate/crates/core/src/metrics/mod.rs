//! The 11-metric evaluation suite for (generated, reference) summary pairs:
//! ROUGE-1/2/L, BERTScore precision/recall/F1, semantic similarity, Flesch
//! reading ease, distinct-1/2, and keyphrase matching.
//!
//! Lexical metrics are pure functions of token sequences. BERTScore,
//! semantic similarity, and keyphrase matching consume embeddings through
//! the [`TokenEmbedder`]/[`TextEmbedder`] traits so they can run against a
//! wire backend or a deterministic in-process mock.
//!
//! All computations are generic over the scalar type through [`Scalar`];
//! the crate root pins the pipeline to `f64`.

mod embedding;
mod keyphrase;
mod lexical;
mod readability;

pub use embedding::{bertscore, cosine, map_to_unit, semantic_similarity, BertScore};
pub use keyphrase::{candidate_phrases, keyphrase_match, top_phrases};
pub use lexical::{distinct_n, lcs_length, rouge_l, rouge_n, tokenize, TokenSequence};
pub use readability::{count_syllables, flesch_from_counts, flesch_reading_ease};

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

/// Scalar type for metric computation: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Embeds each token string independently (non-contextual).
pub trait TokenEmbedder<F> {
    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<F>>, ProviderError>;
}

/// Embeds a whole text as one vector.
pub trait TextEmbedder<F> {
    fn embed_text(&self, text: &str) -> Result<Vec<F>, ProviderError>;
}

/// An embedding provider failed; carries the provider's message.
#[derive(Debug, Clone, Error)]
#[error("{0}")]
pub struct ProviderError(pub String);

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty input")]
    EmptyInput,
    #[error("token sequence shorter than the n-gram size")]
    TooShort,
    #[error("embedding provider failed: {0}")]
    Provider(#[from] ProviderError),
    /// One or more provider-backed metrics failed; the message lists them.
    #[error("provider failures: {0}")]
    ProviderFailures(String),
}

/// The scores reported for one (generated, reference) pair.
///
/// Every field lies in [0, 1] except `readability`, which lies in [0, 100].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector<F> {
    pub rouge1_f: F,
    pub rouge2_f: F,
    pub rouge_l_f: F,
    pub bertscore_p: F,
    pub bertscore_r: F,
    pub bertscore_f1: F,
    pub semantic_similarity: F,
    pub readability: F,
    pub distinct1: F,
    pub distinct2: F,
    pub keyphrase_match: F,
}

impl<F: Scalar> MetricVector<F> {
    /// Column values in report order (R-1 … KM).
    pub fn as_row(&self) -> [F; 11] {
        [
            self.rouge1_f,
            self.rouge2_f,
            self.rouge_l_f,
            self.bertscore_p,
            self.bertscore_r,
            self.bertscore_f1,
            self.semantic_similarity,
            self.readability,
            self.distinct1,
            self.distinct2,
            self.keyphrase_match,
        ]
    }

    /// Check the declared ranges: [0, 1] everywhere, [0, 100] for
    /// readability.
    pub fn in_range(&self) -> bool {
        let unit = |v: F| v >= F::zero() && v <= F::one();
        unit(self.rouge1_f)
            && unit(self.rouge2_f)
            && unit(self.rouge_l_f)
            && unit(self.bertscore_p)
            && unit(self.bertscore_r)
            && unit(self.bertscore_f1)
            && unit(self.semantic_similarity)
            && unit(self.distinct1)
            && unit(self.distinct2)
            && unit(self.keyphrase_match)
            && self.readability >= F::zero()
            && self.readability <= F::from_f64(100.0).unwrap()
    }
}

/// Report column abbreviations, in order.
pub const COLUMN_HEADERS: [&str; 11] = [
    "R-1", "R-2", "R-L", "BS-P", "BS-R", "BS-F1", "SS", "FKR", "D-1", "D-2", "KM",
];

/// Embedding providers and parameters for a pair evaluation.
pub struct PairProviders<'a, F> {
    pub token_embedder: &'a dyn TokenEmbedder<F>,
    pub text_embedder: &'a dyn TextEmbedder<F>,
    /// Top-k phrases considered by keyphrase matching.
    pub keyphrase_k: usize,
}

/// A metric vector plus flags for degenerate inputs (e.g. a generated text
/// too short for bigram diversity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation<F> {
    pub metrics: MetricVector<F>,
    pub flags: Vec<String>,
}

/// Score `generated` against `reference` on all 11 metrics.
///
/// Lexical metrics never fail. Degenerate inputs score 0 with a flag
/// recorded. Provider failures across the embedding-backed metrics are
/// aggregated into one error.
pub fn evaluate_pair<F: Scalar>(
    generated: &str,
    reference: &str,
    providers: &PairProviders<'_, F>,
) -> Result<PairEvaluation<F>, MetricError> {
    if reference.trim().is_empty() {
        return Err(MetricError::EmptyInput);
    }

    let candidate = tokenize(generated);
    let refseq = tokenize(reference);
    let mut flags = Vec::new();

    let rouge1_f = rouge_n(&candidate, &refseq, 1);
    let rouge2_f = rouge_n(&candidate, &refseq, 2);
    let rouge_l_f = rouge_l(&candidate, &refseq);

    let distinct1 = distinct_n(&candidate, 1).unwrap_or_else(|_| {
        flags.push("distinct1_too_short".into());
        F::zero()
    });
    let distinct2 = distinct_n(&candidate, 2).unwrap_or_else(|_| {
        flags.push("distinct2_too_short".into());
        F::zero()
    });

    let readability = if text::word_count(generated) == 0 {
        flags.push("empty_generated".into());
        F::zero()
    } else {
        flesch_reading_ease(generated)?
    };

    let mut failures: Vec<String> = Vec::new();
    let (bertscore_p, bertscore_r, bertscore_f1) = if candidate.is_empty() {
        flags.push("bertscore_empty_candidate".into());
        (F::zero(), F::zero(), F::zero())
    } else {
        match bertscore(&candidate, &refseq, providers.token_embedder) {
            Ok(score) => (score.precision, score.recall, score.f1),
            Err(e) => {
                failures.push(format!("bertscore: {e}"));
                (F::zero(), F::zero(), F::zero())
            }
        }
    };

    let semantic = if generated.trim().is_empty() {
        flags.push("semantic_similarity_empty_candidate".into());
        F::zero()
    } else {
        match semantic_similarity(generated, reference, providers.text_embedder) {
            Ok(score) => score,
            Err(e) => {
                failures.push(format!("semantic_similarity: {e}"));
                F::zero()
            }
        }
    };

    let keyphrase = if generated.trim().is_empty() {
        flags.push("keyphrase_empty_candidate".into());
        F::zero()
    } else {
        match keyphrase_match(
            generated,
            reference,
            providers.text_embedder,
            providers.keyphrase_k,
        ) {
            Ok(score) => score,
            Err(e) => {
                failures.push(format!("keyphrase_match: {e}"));
                F::zero()
            }
        }
    };

    if !failures.is_empty() {
        return Err(MetricError::ProviderFailures(failures.join("; ")));
    }

    Ok(PairEvaluation {
        metrics: MetricVector {
            rouge1_f,
            rouge2_f,
            rouge_l_f,
            bertscore_p,
            bertscore_r,
            bertscore_f1,
            semantic_similarity: semantic,
            readability,
            distinct1,
            distinct2,
            keyphrase_match: keyphrase,
        },
        flags,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockBackend;

    fn mock_providers(backend: &MockBackend) -> PairProviders<'_, f64> {
        PairProviders {
            token_embedder: backend,
            text_embedder: backend,
            keyphrase_k: 10,
        }
    }

    #[test]
    fn identity_pair_maxes_similarity_metrics() {
        let backend = MockBackend::new();
        let text = "The sample copies itself to the startup folder. It then \
                    contacts a remote host and downloads a second stage.";
        let result = evaluate_pair(text, text, &mock_providers(&backend)).unwrap();
        let m = &result.metrics;
        assert!((m.rouge1_f - 1.0).abs() < 1e-9);
        assert!((m.rouge2_f - 1.0).abs() < 1e-9);
        assert!((m.rouge_l_f - 1.0).abs() < 1e-9);
        assert!((m.bertscore_f1 - 1.0).abs() < 1e-6);
        assert!((m.semantic_similarity - 1.0).abs() < 1e-6);
        assert!((m.keyphrase_match - 1.0).abs() < 1e-6);
        assert!(m.in_range());
        assert!(result.flags.is_empty());
    }

    #[test]
    fn disjoint_vocabulary_zeroes_lexical_overlap() {
        let backend = MockBackend::new();
        let result = evaluate_pair(
            "alpha beta gamma",
            "delta epsilon zeta",
            &mock_providers(&backend),
        )
        .unwrap();
        let m = &result.metrics;
        assert_eq!(m.rouge1_f, 0.0);
        assert_eq!(m.rouge2_f, 0.0);
        assert_eq!(m.rouge_l_f, 0.0);
        assert_eq!(m.keyphrase_match, 0.0);
        assert!(m.in_range());
    }

    #[test]
    fn empty_generated_is_total_with_flags() {
        let backend = MockBackend::new();
        let result = evaluate_pair("", "real reference text.", &mock_providers(&backend)).unwrap();
        let m = &result.metrics;
        assert_eq!(m.rouge1_f, 0.0);
        assert_eq!(m.readability, 0.0);
        assert_eq!(m.bertscore_f1, 0.0);
        assert!(result.flags.iter().any(|f| f == "empty_generated"));
        assert!(m.in_range());
    }

    #[test]
    fn empty_reference_is_an_error() {
        let backend = MockBackend::new();
        let err = evaluate_pair("text", "  ", &mock_providers(&backend)).unwrap_err();
        assert!(matches!(err, MetricError::EmptyInput));
    }

    #[test]
    fn provider_failures_are_aggregated() {
        let failing = test_embedders::FailingEmbedder;
        let providers = PairProviders {
            token_embedder: &failing,
            text_embedder: &failing,
            keyphrase_k: 10,
        };
        let err = evaluate_pair("some generated text.", "some reference.", &providers)
            .unwrap_err();
        let MetricError::ProviderFailures(msg) = err else {
            panic!("expected aggregated failures, got {err:?}");
        };
        assert!(msg.contains("bertscore"));
        assert!(msg.contains("semantic_similarity"));
        assert!(msg.contains("keyphrase_match"));
    }

    #[test]
    fn works_at_f32_precision() {
        struct ConstEmbedder;
        impl TokenEmbedder<f32> for ConstEmbedder {
            fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
                Ok(tokens.iter().map(|_| vec![1.0f32, 0.0]).collect())
            }
        }
        impl TextEmbedder<f32> for ConstEmbedder {
            fn embed_text(&self, _: &str) -> Result<Vec<f32>, ProviderError> {
                Ok(vec![0.0f32, 1.0])
            }
        }
        let providers = PairProviders::<f32> {
            token_embedder: &ConstEmbedder,
            text_embedder: &ConstEmbedder,
            keyphrase_k: 5,
        };
        let result = evaluate_pair("malware deletes files.", "malware deletes files.", &providers)
            .unwrap();
        assert!((result.metrics.rouge1_f - 1.0f32).abs() < 1e-6);
        assert!(result.metrics.in_range());
    }
}
