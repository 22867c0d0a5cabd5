//! Core library for turning dynamic-analysis sandbox reports into
//! human-readable malware behavior summaries and scoring those summaries
//! against human-written references.
//!
//! The pipeline has four stages:
//!
//! 1. [`report`] — parse a Cuckoo-style JSON report into a typed model.
//! 2. [`distill`] — filter provenance noise and truncate the evidence to a
//!    token budget.
//! 3. [`summarize`] — build the prompt, call a chat-completion endpoint via
//!    [`gateway`], and post-process the completion into a structured summary.
//! 4. [`metrics`] — score a (generated, reference) pair with the 11-metric
//!    suite (ROUGE 1/2/L, BERTScore P/R/F1, semantic similarity, reading
//!    ease, distinct-1/2, keyphrase match).
//!
//! Batch orchestration, ground-truth ingestion, result persistence, and
//! table rendering live in [`batch`], [`ground_truth`], and [`table`].
//!
//! Metric computation is generic over the scalar type (`f32`/`f64`) through
//! [`metrics::Scalar`]; the aliases below fix the pipeline to `f64`.

pub mod batch;
pub mod config;
pub mod distill;
pub mod gateway;
pub mod ground_truth;
pub mod metrics;
pub mod report;
pub mod summarize;
pub mod table;
pub mod text;

/// Scalar type used by the pipeline.
pub type Score = f64;

/// The 11-metric score vector at pipeline precision.
pub type MetricVector = metrics::MetricVector<Score>;

/// Per-pair evaluation result at pipeline precision.
pub type PairEvaluation = metrics::PairEvaluation<Score>;
