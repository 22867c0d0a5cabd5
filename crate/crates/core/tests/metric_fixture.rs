//! One fixture pair with all 11 metric values pinned: lexical, diversity,
//! and readability values are hand-derived; embedding-backed values are
//! recomputed here through an independent scoring path over the mock's
//! deterministic embeddings.

use std::collections::BTreeSet;

use malsum_core::gateway::MockBackend;
use malsum_core::metrics::{evaluate_pair, PairProviders};

const GENERATED: &str = "The sample deletes backup files. The sample contacts evil.test.";
const REFERENCE: &str = "Malware deletes backups and contacts evil.test quickly.";

// Hand-tokenized forms:
// generated -> [the, sample, deletes, backup, files, the, sample,
//               contacts, evil, test]                       (10 tokens)
// reference -> [malware, deletes, backups, and, contacts, evil, test,
//               quickly]                                     (8 tokens)

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn mapped(s: f64) -> f64 {
    (s + 1.0) / 2.0
}

fn oracle_greedy_mean(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|v| {
            to.iter()
                .map(|w| mapped(oracle_cosine(v, w)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / from.len() as f64
}

fn oracle_top_phrases(
    phrases: &[&str],
    text: &str,
    backend: &MockBackend,
    k: usize,
) -> BTreeSet<String> {
    let text_vec = backend.embedding_for(text);
    let mut scored: Vec<(f64, &str)> = phrases
        .iter()
        .map(|p| (mapped(oracle_cosine(&backend.embedding_for(p), &text_vec)), *p))
        .collect();
    scored.sort_by(|(sa, pa), (sb, pb)| {
        sb.partial_cmp(sa)
            .unwrap()
            .then_with(|| pa.cmp(pb))
    });
    scored.into_iter().take(k).map(|(_, p)| p.to_string()).collect()
}

#[test]
fn fixture_pair_matches_hand_and_oracle_values() {
    let backend = MockBackend::new();
    let providers = PairProviders {
        token_embedder: &backend,
        text_embedder: &backend,
        keyphrase_k: 10,
    };
    let m = evaluate_pair::<f64>(GENERATED, REFERENCE, &providers)
        .unwrap()
        .metrics;

    // ROUGE-1: clipped overlap {deletes, contacts, evil, test} = 4;
    // P = 4/10, R = 4/8, F1 = 4/9.
    assert!((m.rouge1_f - 4.0 / 9.0).abs() < 1e-9, "rouge1 {}", m.rouge1_f);

    // ROUGE-2: 9 candidate bigrams, 7 reference bigrams; overlap
    // {(contacts, evil), (evil, test)} = 2; P = 2/9, R = 2/7, F1 = 1/4.
    assert!((m.rouge2_f - 0.25).abs() < 1e-9, "rouge2 {}", m.rouge2_f);

    // ROUGE-L: LCS (deletes, contacts, evil, test) = 4; F1 = 4/9.
    assert!((m.rouge_l_f - 4.0 / 9.0).abs() < 1e-9, "rougeL {}", m.rouge_l_f);

    // Distinct-1: 8 unique of 10. Distinct-2: (the, sample) repeats, so
    // 8 unique of 9.
    assert!((m.distinct1 - 0.8).abs() < 1e-9, "distinct1 {}", m.distinct1);
    assert!((m.distinct2 - 8.0 / 9.0).abs() < 1e-9, "distinct2 {}", m.distinct2);

    // Reading ease: 9 whitespace words, 2 sentences, hand-counted
    // vowel-group syllables: the(1) sample(1) deletes(3) backup(2)
    // files(2) the(1) sample(1) contacts(2) evil.test(3) = 16.
    let raw: f64 = 206.835 - 1.015 * (9.0 / 2.0) - 84.6 * (16.0 / 9.0);
    let expected_fkr = raw.clamp(0.0, 100.0);
    assert!(
        (m.readability - expected_fkr).abs() < 1e-9,
        "readability {} != {expected_fkr}",
        m.readability
    );

    // BERTScore: greedy-max mapped cosine recomputed independently over
    // the mock's embeddings.
    let generated_tokens = [
        "the", "sample", "deletes", "backup", "files", "the", "sample", "contacts", "evil",
        "test",
    ];
    let reference_tokens = [
        "malware", "deletes", "backups", "and", "contacts", "evil", "test", "quickly",
    ];
    let gen_vecs: Vec<Vec<f64>> = generated_tokens
        .iter()
        .map(|t| backend.embedding_for(t))
        .collect();
    let ref_vecs: Vec<Vec<f64>> = reference_tokens
        .iter()
        .map(|t| backend.embedding_for(t))
        .collect();
    let p = oracle_greedy_mean(&gen_vecs, &ref_vecs);
    let r = oracle_greedy_mean(&ref_vecs, &gen_vecs);
    let f1 = 2.0 * p * r / (p + r);
    assert!((m.bertscore_p - p).abs() < 1e-6, "bsp {} != {p}", m.bertscore_p);
    assert!((m.bertscore_r - r).abs() < 1e-6, "bsr {} != {r}", m.bertscore_r);
    assert!((m.bertscore_f1 - f1).abs() < 1e-6, "bsf1 {} != {f1}", m.bertscore_f1);

    // Semantic similarity: mapped cosine of the two whole-text mock
    // embeddings.
    let expected_ss = mapped(oracle_cosine(
        &backend.embedding_for(GENERATED),
        &backend.embedding_for(REFERENCE),
    ));
    assert!(
        (m.semantic_similarity - expected_ss).abs() < 1e-6,
        "ss {} != {expected_ss}",
        m.semantic_similarity
    );

    // Keyphrase match: phrase inventories hand-derived ("the"/"and" are
    // stopwords), ranked by the same mock embeddings, Jaccard of the two
    // top-10 sets.
    let generated_phrases = [
        "sample", "deletes", "backup", "files", "contacts", "evil", "test",
        "sample deletes", "deletes backup", "backup files", "sample contacts",
        "contacts evil", "evil test",
    ];
    let reference_phrases = [
        "malware", "deletes", "backups", "contacts", "evil", "test", "quickly",
        "malware deletes", "deletes backups", "contacts evil", "evil test",
        "test quickly",
    ];
    let top_generated = oracle_top_phrases(&generated_phrases, GENERATED, &backend, 10);
    let top_reference = oracle_top_phrases(&reference_phrases, REFERENCE, &backend, 10);
    let intersection = top_generated.intersection(&top_reference).count() as f64;
    let union = top_generated.union(&top_reference).count() as f64;
    let expected_km = intersection / union;
    assert!(
        (m.keyphrase_match - expected_km).abs() < 1e-6,
        "km {} != {expected_km}",
        m.keyphrase_match
    );

    assert!(m.in_range());
}
