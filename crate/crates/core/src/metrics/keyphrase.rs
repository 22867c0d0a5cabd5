//! Keyphrase matching: embedding-ranked 1/2-gram extraction from each text
//! and Jaccard overlap of the two top-k phrase sets.
//!
//! Candidate phrases are the distinct unigrams and bigrams of the tokenized
//! text with stopwords acting as phrase boundaries: a stopword unigram is
//! dropped, and a bigram touching a stopword is dropped. Each phrase is
//! scored by the mapped cosine between its embedding and the full text's
//! embedding; ties break lexicographically.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use super::embedding::{cosine, map_to_unit};
use super::{tokenize, MetricError, Scalar, TextEmbedder};

const STOPWORDS_RAW: &str = include_str!("stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_RAW
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty())
            .collect()
    })
}

/// Distinct candidate phrases of `text`: non-stopword unigrams and bigrams
/// whose words are both non-stopwords.
pub fn candidate_phrases(text: &str) -> BTreeSet<String> {
    let tokens = tokenize(text);
    let words = tokens.tokens();
    let stop = stopwords();
    let mut phrases = BTreeSet::new();
    for word in words {
        if !stop.contains(word.as_str()) {
            phrases.insert(word.clone());
        }
    }
    for pair in words.windows(2) {
        if !stop.contains(pair[0].as_str()) && !stop.contains(pair[1].as_str()) {
            phrases.insert(format!("{} {}", pair[0], pair[1]));
        }
    }
    phrases
}

/// The top-k phrases of `text`, ranked by mapped cosine similarity to the
/// whole-text embedding, ties broken lexicographically.
pub fn top_phrases<F: Scalar>(
    text: &str,
    embedder: &dyn TextEmbedder<F>,
    k: usize,
) -> Result<BTreeSet<String>, MetricError> {
    let phrases = candidate_phrases(text);
    if phrases.is_empty() {
        return Ok(BTreeSet::new());
    }
    let text_vector = embedder.embed_text(text)?;
    let mut scored: Vec<(F, String)> = Vec::with_capacity(phrases.len());
    for phrase in phrases {
        let phrase_vector = embedder.embed_text(&phrase)?;
        let score = map_to_unit(cosine(&phrase_vector, &text_vector));
        scored.push((score, phrase));
    }
    scored.sort_by(|(score_a, phrase_a), (score_b, phrase_b)| {
        score_b
            .partial_cmp(score_a)
            .unwrap_or(Ordering::Equal)
            .then_with(|| phrase_a.cmp(phrase_b))
    });
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(_, phrase)| phrase)
        .collect())
}

/// Jaccard similarity of the two top-k phrase sets. Two empty sets count
/// as identical.
pub fn keyphrase_match<F: Scalar>(
    candidate: &str,
    reference: &str,
    embedder: &dyn TextEmbedder<F>,
    k: usize,
) -> Result<F, MetricError> {
    if candidate.trim().is_empty() || reference.trim().is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let candidate_set = top_phrases::<F>(candidate, embedder, k)?;
    let reference_set = top_phrases::<F>(reference, embedder, k)?;
    if candidate_set.is_empty() && reference_set.is_empty() {
        return Ok(F::one());
    }
    let intersection = candidate_set.intersection(&reference_set).count();
    let union = candidate_set.union(&reference_set).count();
    Ok(F::from_usize(intersection).unwrap() / F::from_usize(union).unwrap())
}
