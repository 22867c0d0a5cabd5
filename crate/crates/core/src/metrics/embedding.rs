//! Embedding-backed similarity: BERTScore-style greedy matching over token
//! embeddings and whole-text semantic similarity.
//!
//! Cosine values are mapped from [-1, 1] to [0, 1] via `(s + 1) / 2` so the
//! reported scores share the unit range with the lexical metrics. Token
//! embeddings are non-contextual (each token embedded independently); no
//! IDF weighting or baseline rescaling is applied.

use super::{MetricError, Scalar, TextEmbedder, TokenEmbedder, TokenSequence};

/// Cosine similarity. Returns 0 when either vector has zero norm.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut dot = F::zero();
    let mut norm_a = F::zero();
    let mut norm_b = F::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot = dot + x * y;
        norm_a = norm_a + x * x;
        norm_b = norm_b + y * y;
    }
    if norm_a == F::zero() || norm_b == F::zero() {
        return F::zero();
    }
    dot / (norm_a.sqrt() * norm_b.sqrt())
}

/// Map a cosine in [-1, 1] to [0, 1].
pub fn map_to_unit<F: Scalar>(similarity: F) -> F {
    let mapped = (similarity + F::one()) / (F::one() + F::one());
    mapped.max(F::zero()).min(F::one())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertScore<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

fn greedy_mean<F: Scalar>(from: &[Vec<F>], to: &[Vec<F>]) -> F {
    let total = from
        .iter()
        .map(|vector| {
            to.iter()
                .map(|other| map_to_unit(cosine(vector, other)))
                .fold(F::zero(), F::max)
        })
        .fold(F::zero(), |acc, best| acc + best);
    total / F::from_usize(from.len()).unwrap()
}

/// Greedy-max token matching: precision averages over candidate tokens,
/// recall over reference tokens, F1 is their harmonic mean.
pub fn bertscore<F: Scalar>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    embedder: &dyn TokenEmbedder<F>,
) -> Result<BertScore<F>, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let candidate_vectors = embedder.embed_tokens(candidate.tokens())?;
    let reference_vectors = embedder.embed_tokens(reference.tokens())?;
    let precision = greedy_mean(&candidate_vectors, &reference_vectors);
    let recall = greedy_mean(&reference_vectors, &candidate_vectors);
    let f1 = if precision + recall == F::zero() {
        F::zero()
    } else {
        let two = F::one() + F::one();
        two * precision * recall / (precision + recall)
    };
    Ok(BertScore {
        precision,
        recall,
        f1,
    })
}

/// Mapped cosine between the whole-text embeddings of the two inputs.
pub fn semantic_similarity<F: Scalar>(
    candidate: &str,
    reference: &str,
    embedder: &dyn TextEmbedder<F>,
) -> Result<F, MetricError> {
    if candidate.trim().is_empty() || reference.trim().is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let a = embedder.embed_text(candidate)?;
    let b = embedder.embed_text(reference)?;
    Ok(map_to_unit(cosine(&a, &b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_embedders::FixedEmbedder;
    use crate::metrics::TokenSequence;

    #[test]
    fn cosine_basics() {
        assert!((cosine::<f64>(&[1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((cosine::<f64>(&[1.0, 0.0], &[0.0, 1.0])).abs() < 1e-12);
        assert!((cosine::<f64>(&[1.0, 0.0], &[-1.0, 0.0]) + 1.0).abs() < 1e-12);
        assert_eq!(cosine::<f64>(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn map_to_unit_endpoints() {
        assert_eq!(map_to_unit(1.0f64), 1.0);
        assert_eq!(map_to_unit(-1.0f64), 0.0);
        assert_eq!(map_to_unit(0.0f64), 0.5);
    }

    #[test]
    fn identical_sequences_score_one() {
        let embedder = FixedEmbedder::new(&[("scan", &[1.0, 0.0]), ("delete", &[0.0, 1.0])]);
        let seq = TokenSequence::from_words(&["scan", "delete"]);
        let score = bertscore(&seq, &seq, &embedder).unwrap();
        assert!((score.precision - 1.0).abs() < 1e-12);
        assert!((score.recall - 1.0).abs() < 1e-12);
        assert!((score.f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_tokens_score_half() {
        // Candidate tokens orthogonal to every reference token: cosine 0
        // maps to 0.5.
        let embedder = FixedEmbedder::new(&[("alpha", &[1.0, 0.0]), ("beta", &[0.0, 1.0])]);
        let candidate = TokenSequence::from_words(&["alpha"]);
        let reference = TokenSequence::from_words(&["beta"]);
        let score = bertscore(&candidate, &reference, &embedder).unwrap();
        assert!((score.precision - 0.5).abs() < 1e-12);
        assert!((score.recall - 0.5).abs() < 1e-12);
        assert!((score.f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mixed_match_hand_computed() {
        // One exact match (1.0) and one orthogonal token (0.5):
        // P = (1 + 0.5) / 2 = 0.75.
        let embedder = FixedEmbedder::new(&[
            ("match", &[1.0, 0.0, 0.0]),
            ("stray", &[0.0, 1.0, 0.0]),
        ]);
        let candidate = TokenSequence::from_words(&["match", "stray"]);
        let reference = TokenSequence::from_words(&["match"]);
        let score = bertscore(&candidate, &reference, &embedder).unwrap();
        assert!((score.precision - 0.75).abs() < 1e-12);
        // The single reference token matches exactly: R = 1.
        assert!((score.recall - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sequence_errors() {
        let embedder = FixedEmbedder::new(&[]);
        let empty = crate::metrics::tokenize("");
        let seq = TokenSequence::from_words(&["word"]);
        assert!(matches!(
            bertscore(&empty, &seq, &embedder),
            Err(MetricError::EmptyInput)
        ));
    }

    #[test]
    fn semantic_similarity_mock_constructions() {
        let embedder = FixedEmbedder::new(&[
            ("same text", &[0.6, 0.8]),
            ("orthogonal", &[0.8, -0.6]),
            ("antipodal", &[-0.6, -0.8]),
        ]);
        let identical: f64 = semantic_similarity("same text", "same text", &embedder).unwrap();
        assert!((identical - 1.0).abs() < 1e-12);
        let orthogonal: f64 = semantic_similarity("same text", "orthogonal", &embedder).unwrap();
        assert!((orthogonal - 0.5).abs() < 1e-12);
        let antipodal: f64 = semantic_similarity("same text", "antipodal", &embedder).unwrap();
        assert!(antipodal.abs() < 1e-12);
    }

    #[test]
    fn provider_errors_propagate() {
        let embedder = FixedEmbedder::new(&[]);
        let seq = TokenSequence::from_words(&["unknown"]);
        assert!(matches!(
            bertscore(&seq, &seq, &embedder),
            Err(MetricError::Provider(_))
        ));
    }
}
