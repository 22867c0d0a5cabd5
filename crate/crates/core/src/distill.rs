//! Report distillation: filter provenance noise out of a parsed report and
//! truncate the remaining evidence to a token budget.
//!
//! Provenance maps (`target_meta`, `analysis_meta`) are never rendered.
//! API-call arguments whose key matches an excluded-field pattern are
//! dropped. When the full rendering exceeds the budget, whole sections are
//! cut from the lowest-priority end, and the last retained section is
//! truncated line by line with an explicit elision marker.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::SandboxReport;

/// Rough token estimate: one token per four bytes, rounded up.
///
/// Deterministic and endpoint-agnostic; monotone in text length.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

/// Evidence sections, in default priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Signatures,
    Processes,
    Network,
    DroppedFiles,
}

impl Section {
    pub const ALL: [Section; 4] = [
        Section::Signatures,
        Section::Processes,
        Section::Network,
        Section::DroppedFiles,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Section::Signatures => "signatures",
            Section::Processes => "processes",
            Section::Network => "network",
            Section::DroppedFiles => "dropped_files",
        }
    }
}

impl std::fmt::Display for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Controls what the distiller removes and how much it keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillationConfig {
    /// Case-insensitive substring patterns matched against API argument
    /// keys; matching arguments are dropped from the rendering.
    #[serde(default = "default_excluded_fields")]
    pub excluded_fields: BTreeSet<String>,
    /// Estimated-token allowance for the rendered evidence.
    #[serde(default = "default_token_budget")]
    pub token_budget: usize,
    /// Section rendering order, highest priority first. Must be a
    /// permutation of the four known sections.
    #[serde(default = "default_section_priority")]
    pub section_priority: Vec<Section>,
    /// API calls retained per process before the elision marker.
    #[serde(default = "default_max_calls")]
    pub max_calls_per_process: usize,
}

fn default_excluded_fields() -> BTreeSet<String> {
    [
        "time", "timestamp", "date", "started", "ended", "clock", "seen", "duration", "size",
        "length", "md5", "sha1", "sha256", "sha512", "crc32", "ssdeep", "hash",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_token_budget() -> usize {
    3000
}

fn default_section_priority() -> Vec<Section> {
    Section::ALL.to_vec()
}

fn default_max_calls() -> usize {
    40
}

impl Default for DistillationConfig {
    fn default() -> Self {
        Self {
            excluded_fields: default_excluded_fields(),
            token_budget: default_token_budget(),
            section_priority: default_section_priority(),
            max_calls_per_process: default_max_calls(),
        }
    }
}

impl DistillationConfig {
    /// Check the config invariants; the message names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.token_budget == 0 {
            return Err("distillation.token_budget must be positive".into());
        }
        if self.max_calls_per_process == 0 {
            return Err("distillation.max_calls_per_process must be positive".into());
        }
        let mut seen = BTreeSet::new();
        for section in &self.section_priority {
            if !seen.insert(*section) {
                return Err(format!(
                    "distillation.section_priority lists {section} more than once"
                ));
            }
        }
        if seen.len() != Section::ALL.len() {
            return Err(
                "distillation.section_priority must be a permutation of \
                 signatures, processes, network, dropped_files"
                    .into(),
            );
        }
        Ok(())
    }

    fn is_excluded(&self, key: &str) -> bool {
        let key = key.to_lowercase();
        self.excluded_fields
            .iter()
            .any(|pattern| key.contains(&pattern.to_lowercase()))
    }
}

/// The filtered, budget-bounded evidence handed to the LLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistilledReport {
    pub sample_id: String,
    pub sections: Vec<DistilledSection>,
    pub estimated_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistilledSection {
    pub name: Section,
    pub text: String,
}

impl DistilledReport {
    /// Canonical rendering used for prompts and for budget accounting.
    pub fn rendered(&self) -> String {
        render_blocks(
            &self
                .sections
                .iter()
                .map(|s| (s.name, s.text.clone()))
                .collect::<Vec<_>>(),
        )
    }
}

fn render_blocks(sections: &[(Section, String)]) -> String {
    sections
        .iter()
        .map(|(name, text)| {
            if text.is_empty() {
                format!("## {name}")
            } else {
                format!("## {name}\n{text}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Error)]
pub enum DistillError {
    /// The budget cannot fit even the header of the highest-priority
    /// non-empty section; the configuration is unusable.
    #[error("token budget {budget} cannot fit the {section} section header")]
    BudgetTooSmall { budget: usize, section: Section },
}

/// Filter and truncate `report` according to `cfg`.
///
/// Sections render in `cfg.section_priority` order; empty sections are
/// omitted. The result's `estimated_tokens` never exceeds
/// `cfg.token_budget`.
pub fn distill(
    report: &SandboxReport,
    cfg: &DistillationConfig,
) -> Result<DistilledReport, DistillError> {
    let mut rendered: Vec<(Section, Vec<String>)> = Vec::new();
    for section in &cfg.section_priority {
        let lines = match section {
            Section::Signatures => render_signatures(report),
            Section::Processes => render_processes(report, cfg),
            Section::Network => render_network(report),
            Section::DroppedFiles => render_dropped(report),
        };
        if !lines.is_empty() {
            rendered.push((*section, lines));
        }
    }

    let mut kept: Vec<(Section, String)> = Vec::new();
    for (index, (section, lines)) in rendered.iter().enumerate() {
        let mut candidate = kept.clone();
        candidate.push((*section, lines.join("\n")));
        if estimate_tokens(&render_blocks(&candidate)) <= cfg.token_budget {
            kept = candidate;
            continue;
        }

        // The whole section does not fit: keep the longest line prefix that
        // does, marked with an explicit elision, then stop.
        let mut truncated = None;
        for keep_lines in (0..lines.len()).rev() {
            let mut prefix: Vec<String> = lines[..keep_lines].to_vec();
            prefix.push(format!("… {} more lines omitted", lines.len() - keep_lines));
            let mut candidate = kept.clone();
            candidate.push((*section, prefix.join("\n")));
            if estimate_tokens(&render_blocks(&candidate)) <= cfg.token_budget {
                truncated = Some(candidate);
                break;
            }
        }
        match truncated {
            Some(candidate) => kept = candidate,
            None if index == 0 => {
                if estimate_tokens(&format!("## {section}")) > cfg.token_budget {
                    return Err(DistillError::BudgetTooSmall {
                        budget: cfg.token_budget,
                        section: *section,
                    });
                }
                kept.push((*section, String::new()));
            }
            None => {}
        }
        break;
    }

    let estimated_tokens = estimate_tokens(&render_blocks(&kept));
    Ok(DistilledReport {
        sample_id: report.sample_id.clone(),
        sections: kept
            .into_iter()
            .map(|(name, text)| DistilledSection { name, text })
            .collect(),
        estimated_tokens,
    })
}

fn render_signatures(report: &SandboxReport) -> Vec<String> {
    let mut lines = Vec::new();
    for sig in &report.signatures {
        if sig.description.is_empty() {
            lines.push(format!("- {} (severity {})", sig.name, sig.severity));
        } else {
            lines.push(format!(
                "- {} (severity {}): {}",
                sig.name, sig.severity, sig.description
            ));
        }
        for mark in &sig.marks {
            lines.push(format!("  indicator: {mark}"));
        }
    }
    lines
}

fn render_processes(report: &SandboxReport, cfg: &DistillationConfig) -> Vec<String> {
    let mut lines = Vec::new();
    for process in &report.processes {
        let mut head = format!("- pid {} {}", process.pid, process.process_name);
        if let Some(parent) = process.parent_pid {
            head.push_str(&format!(" (parent {parent})"));
        }
        if let Some(cmd) = &process.command_line {
            head.push_str(&format!(" cmd: {cmd}"));
        }
        lines.push(head);
        let total = process.api_calls.len();
        for call in process.api_calls.iter().take(cfg.max_calls_per_process) {
            let args: Vec<String> = call
                .arguments
                .iter()
                .filter(|(key, _)| !cfg.is_excluded(key))
                .map(|(key, value)| format!("{key}={value}"))
                .collect();
            let mut line = format!("  {} ({})", call.api_name, call.category);
            if !args.is_empty() {
                line.push(' ');
                line.push_str(&args.join(", "));
            }
            if !call.success {
                line.push_str(" [failed]");
            }
            lines.push(line);
        }
        if total > cfg.max_calls_per_process {
            lines.push(format!(
                "  … {} more calls omitted",
                total - cfg.max_calls_per_process
            ));
        }
    }
    lines
}

fn render_network(report: &SandboxReport) -> Vec<String> {
    let mut lines = Vec::new();
    for domain in &report.network.dns_queries {
        lines.push(format!("- dns query: {domain}"));
    }
    for request in &report.network.http_requests {
        lines.push(format!(
            "- http: {} {}{}",
            request.method, request.host, request.path
        ));
    }
    for endpoint in &report.network.contacted_ips {
        if endpoint.port == 0 {
            lines.push(format!("- endpoint: {}", endpoint.address));
        } else {
            lines.push(format!("- endpoint: {}:{}", endpoint.address, endpoint.port));
        }
    }
    lines
}

fn render_dropped(report: &SandboxReport) -> Vec<String> {
    report
        .dropped_files
        .iter()
        .map(|file| format!("- {} ({})", file.path, file.file_type))
        .collect()
}
