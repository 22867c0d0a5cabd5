//! Lexical metrics: tokenization, clipped n-gram ROUGE, LCS-based ROUGE-L,
//! and distinct-n diversity.

use std::collections::HashMap;

use super::{MetricError, Scalar};

/// An ordered sequence of lowercase word tokens.
///
/// Tokens are never empty and never contain whitespace; [`tokenize`] is the
/// only producer outside of tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Build a sequence directly from words; panics on tokens that violate
    /// the invariants. Intended for tests and fixtures.
    pub fn from_words(words: &[&str]) -> Self {
        let tokens: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        assert!(
            tokens
                .iter()
                .all(|t| !t.is_empty() && !t.contains(char::is_whitespace)),
            "invalid token in {words:?}"
        );
        Self { tokens }
    }
}

/// Lowercase `text` and split it on every maximal run of non-alphanumeric
/// characters. Digits are retained.
pub fn tokenize(text: &str) -> TokenSequence {
    let tokens = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    TokenSequence { tokens }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n && n > 0 {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn f1_from_overlap<F: Scalar>(overlap: usize, candidate_total: usize, reference_total: usize) -> F {
    if candidate_total == 0 || reference_total == 0 {
        return F::zero();
    }
    let overlap = F::from_usize(overlap).unwrap();
    let precision = overlap / F::from_usize(candidate_total).unwrap();
    let recall = overlap / F::from_usize(reference_total).unwrap();
    if precision + recall == F::zero() {
        return F::zero();
    }
    let two = F::one() + F::one();
    two * precision * recall / (precision + recall)
}

/// ROUGE-N F1 with clipped n-gram counts, `n` in {1, 2}.
///
/// Returns 0 when either n-gram multiset is empty.
pub fn rouge_n<F: Scalar>(candidate: &TokenSequence, reference: &TokenSequence, n: usize) -> F {
    debug_assert!(n == 1 || n == 2, "rouge_n is defined for n in {{1, 2}}");
    let candidate_counts = ngram_counts(candidate.tokens(), n);
    let reference_counts = ngram_counts(reference.tokens(), n);
    let overlap: usize = candidate_counts
        .iter()
        .map(|(gram, count)| count.min(reference_counts.get(gram).unwrap_or(&0)))
        .sum();
    let candidate_total = candidate.len().saturating_sub(n - 1).min(candidate.len());
    let reference_total = reference.len().saturating_sub(n - 1).min(reference.len());
    f1_from_overlap(overlap, candidate_total, reference_total)
}

/// Length of the longest common subsequence of two token slices.
pub fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // Two-row DP over the shorter dimension.
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut previous = vec![0usize; short.len() + 1];
    let mut current = vec![0usize; short.len() + 1];
    for item in long {
        for (j, other) in short.iter().enumerate() {
            current[j + 1] = if item == other {
                previous[j] + 1
            } else {
                previous[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut previous, &mut current);
    }
    previous[short.len()]
}

/// ROUGE-L F1 from the longest common subsequence.
pub fn rouge_l<F: Scalar>(candidate: &TokenSequence, reference: &TokenSequence) -> F {
    let l = lcs_length(candidate.tokens(), reference.tokens());
    f1_from_overlap(l, candidate.len(), reference.len())
}

/// Proportion of unique n-grams in `tokens`, `n` in {1, 2}.
///
/// Errors with [`MetricError::TooShort`] when the sequence holds fewer than
/// `n` tokens.
pub fn distinct_n<F: Scalar>(tokens: &TokenSequence, n: usize) -> Result<F, MetricError> {
    if tokens.len() < n {
        return Err(MetricError::TooShort);
    }
    let counts = ngram_counts(tokens.tokens(), n);
    let total = tokens.len() - n + 1;
    Ok(F::from_usize(counts.len()).unwrap() / F::from_usize(total).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("Deletes system-files.").tokens(),
            ["deletes", "system", "files"]
        );
        assert_eq!(
            tokenize("C2 at 10.0.0.1").tokens(),
            ["c2", "at", "10", "0", "0", "1"]
        );
    }

    #[test]
    fn rouge1_hand_counted() {
        let candidate = TokenSequence::from_words(&["the", "malware", "deletes", "files"]);
        let reference = TokenSequence::from_words(&["malware", "deletes", "system", "files"]);
        // Clipped unigram overlap 3; P = R = 3/4.
        let f1: f64 = rouge_n(&candidate, &reference, 1);
        assert!((f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rouge2_hand_counted() {
        let candidate = TokenSequence::from_words(&["the", "malware", "deletes", "files"]);
        let reference = TokenSequence::from_words(&["malware", "deletes", "system", "files"]);
        // Only (malware, deletes) overlaps; P = R = 1/3.
        let f1: f64 = rouge_n(&candidate, &reference, 2);
        assert!((f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_identity_is_one() {
        let seq = TokenSequence::from_words(&["copies", "itself", "to", "startup"]);
        assert!((rouge_n::<f64>(&seq, &seq, 1) - 1.0).abs() < 1e-12);
        assert!((rouge_n::<f64>(&seq, &seq, 2) - 1.0).abs() < 1e-12);
        assert!((rouge_l::<f64>(&seq, &seq) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_clipping() {
        // Candidate repeats a token the reference holds once: the clipped
        // overlap is 1, not 3.
        let candidate = TokenSequence::from_words(&["a", "a", "a"]);
        let reference = TokenSequence::from_words(&["a"]);
        let f1: f64 = rouge_n(&candidate, &reference, 1);
        // P = 1/3, R = 1, F1 = 0.5.
        assert!((f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rouge_empty_inputs_are_zero() {
        let empty = tokenize("");
        let seq = TokenSequence::from_words(&["word"]);
        assert_eq!(rouge_n::<f64>(&empty, &seq, 1), 0.0);
        assert_eq!(rouge_n::<f64>(&seq, &empty, 1), 0.0);
        assert_eq!(rouge_n::<f64>(&empty, &empty, 1), 0.0);
        // A one-token sequence has no bigrams.
        assert_eq!(rouge_n::<f64>(&seq, &seq, 2), 0.0);
        assert_eq!(rouge_l::<f64>(&empty, &seq), 0.0);
    }

    #[test]
    fn rouge_l_hand_lcs() {
        let candidate = TokenSequence::from_words(&["the", "malware", "deletes", "files"]);
        let reference = TokenSequence::from_words(&["malware", "deletes", "system", "files"]);
        // LCS = (malware, deletes, files), length 3; P = R = 3/4.
        let f1: f64 = rouge_l(&candidate, &reference);
        assert!((f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_disjoint_is_zero() {
        let a = TokenSequence::from_words(&["alpha", "beta"]);
        let b = TokenSequence::from_words(&["gamma", "delta"]);
        assert_eq!(rouge_l::<f64>(&a, &b), 0.0);
    }

    #[test]
    fn rouge_l_non_contiguous_subsequence() {
        let a = TokenSequence::from_words(&["a", "b", "c", "d"]);
        let b = TokenSequence::from_words(&["a", "x", "c", "y"]);
        assert_eq!(lcs_length(a.tokens(), b.tokens()), 2);
    }

    #[test]
    fn distinct_n_hand_counted() {
        let tokens = TokenSequence::from_words(&["scan", "scan", "delete"]);
        let d1: f64 = distinct_n(&tokens, 1).unwrap();
        assert!((d1 - 2.0 / 3.0).abs() < 1e-12);
        let d2: f64 = distinct_n(&tokens, 2).unwrap();
        assert!((d2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_all_unique_is_one() {
        let tokens = TokenSequence::from_words(&["a", "b", "c", "d"]);
        let d1: f64 = distinct_n(&tokens, 1).unwrap();
        assert_eq!(d1, 1.0);
    }

    #[test]
    fn distinct_too_short() {
        let one = TokenSequence::from_words(&["solo"]);
        assert!(matches!(
            distinct_n::<f64>(&one, 2),
            Err(MetricError::TooShort)
        ));
        let empty = tokenize("");
        assert!(distinct_n::<f64>(&empty, 1).is_err());
    }

    #[test]
    fn distinct1_is_invariant_under_shuffling() {
        // Only the n-gram multiset matters; for n = 1 any permutation
        // gives the same ratio.
        let original = TokenSequence::from_words(&["a", "b", "a", "c", "b"]);
        let shuffled = TokenSequence::from_words(&["b", "a", "c", "b", "a"]);
        let d_original: f64 = distinct_n(&original, 1).unwrap();
        let d_shuffled: f64 = distinct_n(&shuffled, 1).unwrap();
        assert_eq!(d_original, d_shuffled);
    }

    #[test]
    fn appending_existing_token_never_increases_distinct1() {
        let base = TokenSequence::from_words(&["a", "b", "c", "a"]);
        let extended = TokenSequence::from_words(&["a", "b", "c", "a", "b"]);
        let d_base: f64 = distinct_n(&base, 1).unwrap();
        let d_ext: f64 = distinct_n(&extended, 1).unwrap();
        assert!(d_ext <= d_base);
    }
}
