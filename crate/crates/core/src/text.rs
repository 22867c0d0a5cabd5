//! Shared text utilities: sentence segmentation and whitespace
//! normalization.
//!
//! The segmentation rule is deliberately simple: a sentence ends at `.`,
//! `!`, or `?` followed by whitespace or end of text. Abbreviations are not
//! special-cased. Post-processing and the readability metric both rely on
//! this rule so their sentence counts agree.

/// Split `text` into sentences, each trimmed and including its terminator.
///
/// A trailing fragment without a terminator counts as a sentence.
/// Whitespace-only input yields no sentences.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut chars = text.char_indices().peekable();
    while let Some((idx, ch)) = chars.next() {
        if matches!(ch, '.' | '!' | '?') {
            let end_of_text = chars.peek().is_none();
            let followed_by_ws = chars.peek().is_some_and(|&(_, next)| next.is_whitespace());
            if end_of_text || followed_by_ws {
                let end = idx + ch.len_utf8();
                let sentence = text[start..end].trim();
                if !sentence.is_empty() {
                    sentences.push(sentence.to_string());
                }
                start = end;
            }
        }
    }
    if start < bytes.len() {
        let rest = text[start..].trim();
        if !rest.is_empty() {
            sentences.push(rest.to_string());
        }
    }
    sentences
}

/// Collapse every run of whitespace (including newlines) to a single space
/// and trim the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Number of whitespace-separated tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
