//! Ground-truth ingestion: JSON Lines, one human-written behavior
//! description per line.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub sample_id: String,
    pub reference_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_notes: Option<String>,
}

#[derive(Debug, Error)]
pub enum GroundTruthError {
    #[error("cannot read ground truth {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate sample_id {sample_id:?} on lines {first_line} and {second_line}")]
    DuplicateSample {
        sample_id: String,
        first_line: usize,
        second_line: usize,
    },
}

/// Load a `.jsonl` dataset, preserving file order. Whitespace-only lines
/// are skipped; duplicate sample ids are rejected.
pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthEntry>, GroundTruthError> {
    let raw = std::fs::read_to_string(path).map_err(|source| GroundTruthError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ground_truth(&raw)
}

pub fn parse_ground_truth(raw: &str) -> Result<Vec<GroundTruthEntry>, GroundTruthError> {
    let mut entries = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (index, line) in raw.lines().enumerate() {
        let line_number = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let entry: GroundTruthEntry =
            serde_json::from_str(line).map_err(|e| GroundTruthError::MalformedLine {
                line: line_number,
                reason: e.to_string(),
            })?;
        if entry.sample_id.trim().is_empty() {
            return Err(GroundTruthError::MalformedLine {
                line: line_number,
                reason: "sample_id must be non-empty".into(),
            });
        }
        if entry.reference_text.trim().is_empty() {
            return Err(GroundTruthError::MalformedLine {
                line: line_number,
                reason: "reference_text must be non-empty".into(),
            });
        }
        if let Some(&first_line) = seen.get(&entry.sample_id) {
            return Err(GroundTruthError::DuplicateSample {
                sample_id: entry.sample_id,
                first_line,
                second_line: line_number,
            });
        }
        seen.insert(entry.sample_id.clone(), line_number);
        entries.push(entry);
    }
    Ok(entries)
}
