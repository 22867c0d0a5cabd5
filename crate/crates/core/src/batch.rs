//! Batch orchestration: run every (sample, profile) pair, score the result,
//! and persist records incrementally as JSON Lines.
//!
//! Tasks execute on a worker pool of the configured size; a reordering
//! writer commits finished records in task order (sorted by sample_id, then
//! model_name), flushing each line, so the output is deterministic and
//! crash-safe regardless of scheduling. Per-sample failures become error
//! records; only unusable output paths abort a batch.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::RunConfig;
use crate::gateway::{EmbeddingProvider, Gateway, InferenceBackend, ModelProfile};
use crate::ground_truth::GroundTruthEntry;
use crate::metrics::{evaluate_pair, MetricError, MetricVector, PairProviders};
use crate::report::{parse_report, ReportError};
use crate::summarize::{summarize, BehaviorSummary, PipelineError};
use crate::table::render_table;

/// One scored (sample, model) pair: the unit of persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub sample_id: String,
    pub model_name: String,
    pub summary: BehaviorSummary,
    pub metrics: MetricVector<f64>,
    /// latency_ms, attempts, quantization_hint, config_digest,
    /// tool_version, timestamp, usage counts, and metric flags.
    pub run_meta: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub sample_id: String,
    pub model_name: String,
    pub error: String,
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RecordLine {
    Ok(EvaluationRecord),
    Error(ErrorRecord),
}

impl RecordLine {
    pub fn is_ok(&self) -> bool {
        matches!(self, RecordLine::Ok(_))
    }

    pub fn sample_id(&self) -> &str {
        match self {
            RecordLine::Ok(r) => &r.sample_id,
            RecordLine::Error(r) => &r.sample_id,
        }
    }

    pub fn model_name(&self) -> &str {
        match self {
            RecordLine::Ok(r) => &r.model_name,
            RecordLine::Error(r) => &r.model_name,
        }
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot prepare output dir {path}: {source}")]
    OutputDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// What a finished batch produced.
#[derive(Debug)]
pub struct BatchOutcome {
    pub records: Vec<RecordLine>,
    pub ok_count: usize,
    pub error_count: usize,
    /// Ground-truth samples skipped because no report file was found.
    pub skipped_samples: Vec<String>,
    pub records_path: PathBuf,
    pub table_path: Option<PathBuf>,
    pub table: Option<String>,
}

impl BatchOutcome {
    pub fn ok_records(&self) -> Vec<&EvaluationRecord> {
        self.records
            .iter()
            .filter_map(|line| match line {
                RecordLine::Ok(record) => Some(record),
                RecordLine::Error(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Error)]
enum TaskError {
    #[error("cannot read report: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("evaluation failed: {0}")]
    Metric(#[from] MetricError),
}

struct Task<'a> {
    entry: &'a GroundTruthEntry,
    profile: &'a ModelProfile,
}

/// Run the full batch: summarize and evaluate every ground-truth sample
/// against every profile, writing `records.jsonl` (and `table.md` when at
/// least one record succeeded) under the config's output dir.
pub fn run_batch<B: InferenceBackend>(
    cfg: &RunConfig,
    reports_dir: &Path,
    ground_truth: &[GroundTruthEntry],
    gateway: &Gateway<B>,
) -> Result<BatchOutcome, BatchError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| BatchError::OutputDir {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let records_path = cfg.output_dir.join("records.jsonl");
    let mut writer = File::create(&records_path).map_err(|source| BatchError::Write {
        path: records_path.clone(),
        source,
    })?;

    let mut skipped_samples = Vec::new();
    let mut tasks: Vec<Task<'_>> = Vec::new();
    for entry in ground_truth {
        let report_path = reports_dir.join(format!("{}.json", entry.sample_id));
        if !report_path.exists() {
            log::warn!(
                "skipping sample {}: no report at {}",
                entry.sample_id,
                report_path.display()
            );
            skipped_samples.push(entry.sample_id.clone());
            continue;
        }
        for profile in &cfg.profiles {
            tasks.push(Task { entry, profile });
        }
    }
    tasks.sort_by(|a, b| {
        (&a.entry.sample_id, &a.profile.model_name)
            .cmp(&(&b.entry.sample_id, &b.profile.model_name))
    });

    let config_digest = cfg.digest();
    let next_task = AtomicUsize::new(0);
    let workers = cfg.parallelism.max(1).min(tasks.len().max(1));
    let (sender, receiver) = mpsc::channel::<(usize, RecordLine)>();

    let mut records: Vec<RecordLine> = Vec::with_capacity(tasks.len());
    let mut write_error: Option<std::io::Error> = None;

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let sender = sender.clone();
            let tasks = &tasks;
            let next_task = &next_task;
            let config_digest = &config_digest;
            scope.spawn(move || loop {
                let index = next_task.fetch_add(1, Ordering::SeqCst);
                if index >= tasks.len() {
                    break;
                }
                let task = &tasks[index];
                let line = run_task(task, reports_dir, cfg, gateway, config_digest);
                if sender.send((index, line)).is_err() {
                    break;
                }
            });
        }
        drop(sender);

        // Commit results in task order, flushing each line.
        let mut pending: BTreeMap<usize, RecordLine> = BTreeMap::new();
        let mut next_write = 0usize;
        for (index, line) in receiver {
            pending.insert(index, line);
            while let Some(line) = pending.remove(&next_write) {
                if write_error.is_none() {
                    let serialized = serde_json::to_string(&line).expect("record serializes");
                    if let Err(e) = writeln!(writer, "{serialized}").and_then(|_| writer.flush())
                    {
                        write_error = Some(e);
                    }
                }
                records.push(line);
                next_write += 1;
            }
        }
    });

    if let Some(source) = write_error {
        return Err(BatchError::Write {
            path: records_path,
            source,
        });
    }

    let ok_count = records.iter().filter(|line| line.is_ok()).count();
    let error_count = records.len() - ok_count;

    let ok_records: Vec<EvaluationRecord> = records
        .iter()
        .filter_map(|line| match line {
            RecordLine::Ok(record) => Some(record.clone()),
            RecordLine::Error(_) => None,
        })
        .collect();
    let (table, table_path) = if ok_records.is_empty() {
        (None, None)
    } else {
        let rendered = render_table(&ok_records).expect("non-empty records render");
        let path = cfg.output_dir.join("table.md");
        std::fs::write(&path, &rendered).map_err(|source| BatchError::Write {
            path: path.clone(),
            source,
        })?;
        (Some(rendered), Some(path))
    };

    Ok(BatchOutcome {
        records,
        ok_count,
        error_count,
        skipped_samples,
        records_path,
        table_path,
        table,
    })
}

fn run_task<B: InferenceBackend>(
    task: &Task<'_>,
    reports_dir: &Path,
    cfg: &RunConfig,
    gateway: &Gateway<B>,
    config_digest: &str,
) -> RecordLine {
    match evaluate_sample(task, reports_dir, cfg, gateway, config_digest) {
        Ok(record) => RecordLine::Ok(record),
        Err(error) => RecordLine::Error(ErrorRecord {
            sample_id: task.entry.sample_id.clone(),
            model_name: task.profile.model_name.clone(),
            error: error.to_string(),
        }),
    }
}

fn evaluate_sample<B: InferenceBackend>(
    task: &Task<'_>,
    reports_dir: &Path,
    cfg: &RunConfig,
    gateway: &Gateway<B>,
    config_digest: &str,
) -> Result<EvaluationRecord, TaskError> {
    let report_path = reports_dir.join(format!("{}.json", task.entry.sample_id));
    let raw = std::fs::read_to_string(&report_path)?;
    let mut report = parse_report(&raw)?;
    // The ground-truth id is canonical for the batch.
    report.sample_id = task.entry.sample_id.clone();

    let output = summarize(
        &report,
        &cfg.distillation,
        &cfg.template,
        task.profile,
        gateway,
    )?;

    let embedder = EmbeddingProvider::new(gateway, &cfg.embedder_profile);
    let providers = PairProviders {
        token_embedder: &embedder,
        text_embedder: &embedder,
        keyphrase_k: cfg.keyphrase_k,
    };
    let evaluation = evaluate_pair(
        &output.summary.body_text(),
        &task.entry.reference_text,
        &providers,
    )?;

    let mut run_meta = BTreeMap::new();
    run_meta.insert("latency_ms".into(), output.exchange.latency_ms.into());
    run_meta.insert("attempts".into(), output.exchange.attempts.into());
    run_meta.insert(
        "quantization_hint".into(),
        match task.profile.quantization_hint {
            Some(hint) => Value::String(hint.as_str().into()),
            None => Value::Null,
        },
    );
    run_meta.insert("config_digest".into(), config_digest.into());
    run_meta.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
    run_meta.insert("timestamp".into(), unix_timestamp().into());
    if let Some((prompt, completion)) = output.exchange.usage_tokens {
        run_meta.insert("usage_prompt_tokens".into(), prompt.into());
        run_meta.insert("usage_completion_tokens".into(), completion.into());
    }
    if !evaluation.flags.is_empty() {
        run_meta.insert(
            "flags".into(),
            Value::Array(
                evaluation
                    .flags
                    .iter()
                    .map(|f| Value::String(f.clone()))
                    .collect(),
            ),
        );
    }

    Ok(EvaluationRecord {
        sample_id: task.entry.sample_id.clone(),
        model_name: task.profile.model_name.clone(),
        summary: output.summary,
        metrics: evaluation.metrics,
        run_meta,
    })
}

fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
