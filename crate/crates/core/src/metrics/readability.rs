//! Flesch reading ease with a vowel-group syllable heuristic.
//!
//! Sentences are counted with the shared segmentation rule in
//! [`crate::text`], so readability and post-processing agree on what a
//! sentence is.

use super::{MetricError, Scalar};
use crate::text;

/// Count syllables as maximal runs of vowels (`aeiouy`), minus one for a
/// trailing silent `e` when at least one syllable remains. Never below 1.
pub fn count_syllables(word: &str) -> usize {
    debug_assert!(!word.is_empty(), "count_syllables requires a word");
    let lower = word.to_lowercase();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut in_group = false;
    for c in lower.chars() {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
            }
            in_group = true;
        } else {
            in_group = false;
        }
    }
    if lower.ends_with('e') && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

/// Reading-ease score from pre-counted quantities, clamped to [0, 100].
pub fn flesch_from_counts<F: Scalar>(words: usize, sentences: usize, syllables: usize) -> F {
    let words = F::from_usize(words).unwrap();
    let sentences = F::from_usize(sentences).unwrap().max(F::one());
    let syllables = F::from_usize(syllables).unwrap();
    let raw = F::from_f64(206.835).unwrap()
        - F::from_f64(1.015).unwrap() * (words / sentences)
        - F::from_f64(84.6).unwrap() * (syllables / words);
    raw.max(F::zero()).min(F::from_f64(100.0).unwrap())
}

/// Reading ease of `text`: higher is easier, clamped to [0, 100].
///
/// Words are whitespace tokens; syllables are counted on each word after
/// trimming surrounding punctuation.
pub fn flesch_reading_ease<F: Scalar>(text: &str) -> Result<F, MetricError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let sentences = text::split_sentences(text).len();
    let syllables: usize = words
        .iter()
        .map(|word| {
            let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
            count_syllables(if trimmed.is_empty() { word } else { trimmed })
        })
        .sum();
    Ok(flesch_from_counts(words.len(), sentences, syllables))
}
