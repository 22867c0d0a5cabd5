//! Prompt construction, LLM invocation, and completion post-processing:
//! the pipeline spine from a parsed report to a structured
//! [`BehaviorSummary`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distill::{distill, DistillationConfig, DistillError, DistilledReport};
use crate::gateway::{ChatExchange, Gateway, GatewayError, InferenceBackend, ModelProfile};
use crate::report::SandboxReport;
use crate::text;

/// Placeholder the user scaffold must contain exactly once.
pub const EVIDENCE_PLACEHOLDER: &str = "{evidence}";

/// Substituted for the placeholder when a report distills to nothing.
pub const NO_EVIDENCE_MARKER: &str = "(no behavioral evidence)";

/// Paragraph synthesized for a required section the model did not produce.
pub const MISSING_SECTION_FALLBACK: &str = "Not determined from available evidence.";

const DEFAULT_TEMPLATE_TOML: &str = include_str!("default_template.toml");

/// Prompt scaffold and the section structure the output must follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    /// Analyst role framing sent as the system message.
    pub system_text: String,
    /// User message scaffold with a single `{evidence}` placeholder.
    pub user_scaffold: String,
    /// Headings the output must contain, in order.
    #[serde(default = "default_required_sections")]
    pub required_sections: Vec<String>,
}

fn default_required_sections() -> Vec<String> {
    vec![
        "Overview".into(),
        "Observed Behaviors".into(),
        "Impact".into(),
        "Recommended Actions".into(),
    ]
}

impl Default for PromptTemplate {
    fn default() -> Self {
        toml::from_str(DEFAULT_TEMPLATE_TOML).expect("embedded default template parses")
    }
}

impl PromptTemplate {
    /// The embedded default template, as printable TOML.
    pub fn default_toml() -> &'static str {
        DEFAULT_TEMPLATE_TOML
    }

    /// Check the template invariants; the message names the offending
    /// field.
    pub fn validate(&self) -> Result<(), String> {
        if self.system_text.trim().is_empty() {
            return Err("template.system_text must be non-empty".into());
        }
        let placeholders = self.user_scaffold.matches(EVIDENCE_PLACEHOLDER).count();
        if placeholders != 1 {
            return Err(format!(
                "template.user_scaffold must contain exactly one {EVIDENCE_PLACEHOLDER} \
                 placeholder (found {placeholders})"
            ));
        }
        if self.required_sections.is_empty() {
            return Err("template.required_sections must not be empty".into());
        }
        let mut seen = Vec::new();
        for heading in &self.required_sections {
            if heading.trim().is_empty() {
                return Err("template.required_sections contains an empty heading".into());
            }
            let lower = heading.to_lowercase();
            if seen.contains(&lower) {
                return Err(format!(
                    "template.required_sections lists {heading:?} more than once"
                ));
            }
            seen.push(lower);
        }
        Ok(())
    }
}

/// The post-processed, structurally complete summary for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSummary {
    pub sample_id: String,
    pub model_name: String,
    pub sections: Vec<SummarySection>,
    /// The completion before post-processing, kept for audit.
    pub raw_completion: String,
    /// Whitespace-token count of the concatenated paragraphs.
    pub word_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySection {
    pub heading: String,
    pub text: String,
}

impl BehaviorSummary {
    /// Markdown rendering: `## heading` followed by the paragraph.
    pub fn rendered(&self) -> String {
        render_sections(&self.sections)
    }

    /// The paragraphs only, for metric computation.
    pub fn body_text(&self) -> String {
        self.sections
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

pub fn render_sections(sections: &[SummarySection]) -> String {
    sections
        .iter()
        .map(|s| format!("## {}\n{}", s.heading, s.text))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Error)]
pub enum SummarizeError {
    /// The model returned nothing usable.
    #[error("completion is empty or whitespace-only")]
    EmptyCompletion,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Distill(#[from] DistillError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
}

/// Substitute the distilled evidence into the template.
///
/// Returns (system prompt, user prompt). An empty distillation is marked
/// explicitly rather than leaving a hole in the prompt.
pub fn build_prompt(template: &PromptTemplate, distilled: &DistilledReport) -> (String, String) {
    let rendered = distilled.rendered();
    let evidence = if distilled.sections.is_empty() {
        NO_EVIDENCE_MARKER.to_string()
    } else {
        rendered
    };
    let user = template
        .user_scaffold
        .replacen(EVIDENCE_PLACEHOLDER, &evidence, 1);
    (template.system_text.clone(), user)
}

/// Normalize a raw completion into exactly the required sections.
///
/// Whitespace and line endings are normalized, recognized headings split
/// the text (case-insensitive, tolerant of markdown prefixes), consecutive
/// duplicate sentences collapse to one, and absent sections are synthesized
/// with a fixed fallback paragraph. Text before the first heading belongs
/// to the first required section.
pub fn post_process(
    raw: &str,
    template: &PromptTemplate,
) -> Result<Vec<SummarySection>, SummarizeError> {
    if raw.trim().is_empty() {
        return Err(SummarizeError::EmptyCompletion);
    }
    let normalized = raw.replace("\r\n", "\n").replace('\r', "\n");
    // Each bucket holds fragments: contiguous runs of lines. A heading line
    // interrupts the run, and fragments rejoin at a sentence boundary so
    // text from either side of a heading never merges into one sentence.
    let mut buckets: Vec<Vec<String>> = vec![Vec::new(); template.required_sections.len()];
    let mut current = 0usize;
    let mut continuing: Option<usize> = None;
    for line in normalized.lines() {
        if let Some(index) = match_heading(line, &template.required_sections) {
            current = index;
            continuing = None;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if continuing != Some(current) {
            buckets[current].push(String::new());
        }
        let fragment = buckets[current].last_mut().expect("fragment exists");
        fragment.push_str(line);
        fragment.push(' ');
        continuing = Some(current);
    }

    let sections = template
        .required_sections
        .iter()
        .zip(buckets)
        .map(|(heading, fragments)| {
            let joined = join_fragments(&fragments);
            let paragraph = dedup_consecutive_sentences(&text::normalize_whitespace(&joined));
            SummarySection {
                heading: heading.clone(),
                text: if paragraph.is_empty() {
                    MISSING_SECTION_FALLBACK.to_string()
                } else {
                    paragraph
                },
            }
        })
        .collect();
    Ok(sections)
}

fn join_fragments(fragments: &[String]) -> String {
    let mut joined = String::new();
    for fragment in fragments {
        let fragment = fragment.trim();
        if fragment.is_empty() {
            continue;
        }
        if !joined.is_empty() {
            if joined.ends_with(['.', '!', '?']) {
                joined.push(' ');
            } else {
                joined.push_str(". ");
            }
        }
        joined.push_str(fragment);
    }
    joined
}

/// Match a line against the required headings after stripping markdown
/// decoration (`#`, `*`, `-`, `>`, list numbers, trailing colons).
fn match_heading(line: &str, sections: &[String]) -> Option<usize> {
    let mut candidate = line.trim();
    candidate = candidate.trim_start_matches(|c: char| {
        c == '#' || c == '*' || c == '-' || c == '>' || c == '_' || c.is_whitespace()
    });
    // Numbered headings like "1. Overview".
    let digits_stripped = candidate.trim_start_matches(|c: char| c.is_ascii_digit());
    if digits_stripped.len() < candidate.len() {
        candidate = digits_stripped
            .trim_start_matches(['.', ')'])
            .trim_start();
    }
    candidate = candidate.trim_end_matches(|c: char| {
        c == '*' || c == ':' || c == '#' || c == '_' || c.is_whitespace()
    });
    if candidate.is_empty() {
        return None;
    }
    sections
        .iter()
        .position(|s| s.eq_ignore_ascii_case(candidate))
}

fn dedup_consecutive_sentences(paragraph: &str) -> String {
    let sentences = text::split_sentences(paragraph);
    let mut kept: Vec<String> = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        if kept.last().map(String::as_str) != Some(sentence.as_str()) {
            kept.push(sentence);
        }
    }
    kept.join(" ")
}

/// Output of one pipeline run: the summary plus the wire exchange carrying
/// latency, attempts, and token usage for downstream run metadata.
#[derive(Debug, Clone)]
pub struct SummarizeOutput {
    pub summary: BehaviorSummary,
    pub exchange: ChatExchange,
}

/// Distill, prompt, complete, and post-process one report.
///
/// Distiller and gateway errors propagate unchanged.
pub fn summarize<B: InferenceBackend>(
    report: &SandboxReport,
    cfg: &DistillationConfig,
    template: &PromptTemplate,
    profile: &ModelProfile,
    gateway: &Gateway<B>,
) -> Result<SummarizeOutput, PipelineError> {
    let distilled = distill(report, cfg)?;
    let (system, user) = build_prompt(template, &distilled);
    let exchange = gateway.complete(profile, &system, &user)?;
    let sections = post_process(&exchange.completion_text, template)?;
    let word_count = sections
        .iter()
        .map(|s| text::word_count(&s.text))
        .sum();
    Ok(SummarizeOutput {
        summary: BehaviorSummary {
            sample_id: report.sample_id.clone(),
            model_name: profile.model_name.clone(),
            sections,
            raw_completion: exchange.completion_text.clone(),
            word_count,
        },
        exchange,
    })
}
