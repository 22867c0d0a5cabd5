//! Command-line front end: summarize single reports, evaluate summary
//! pairs, run batches, and inspect configuration.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use malsum_core::batch::run_batch;
use malsum_core::config::RunConfig;
use malsum_core::gateway::{
    EmbeddingProvider, Gateway, HttpBackend, InferenceBackend, MockBackend, ModelProfile,
};
use malsum_core::ground_truth::load_ground_truth;
use malsum_core::metrics::{evaluate_pair, PairProviders};
use malsum_core::report::parse_report;
use malsum_core::summarize::{summarize, PromptTemplate};

#[derive(Parser)]
#[command(
    name = "malsum",
    version,
    about = "Summarize malware sandbox reports with an LLM endpoint and score the summaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize one sandbox report and print the summary.
    Summarize {
        /// Path to the sandbox JSON report.
        #[arg(long)]
        report: PathBuf,
        /// Run configuration (TOML). Defaults apply when omitted with
        /// --offline.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use only the profile with this model name.
        #[arg(long)]
        model: Option<String>,
        /// Use the deterministic in-process mock backend.
        #[arg(long)]
        offline: bool,
    },
    /// Score a generated summary against a reference and print the metric
    /// vector as JSON.
    Evaluate {
        /// Path to the generated summary text.
        #[arg(long)]
        generated: PathBuf,
        /// Path to the reference summary text.
        #[arg(long)]
        reference: PathBuf,
        /// Run configuration providing the embedder profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the deterministic in-process mock embedder.
        #[arg(long)]
        offline: bool,
        /// Top-k phrases for keyphrase matching.
        #[arg(long)]
        keyphrase_k: Option<usize>,
    },
    /// Summarize and evaluate every configured sample; write records.jsonl
    /// and table.md.
    Batch {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Directory holding one "{sample_id}.json" report per sample.
        #[arg(long)]
        reports_dir: Option<PathBuf>,
        /// Ground-truth JSONL file.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the config's worker count.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Run only the profile with this model name.
        #[arg(long)]
        model: Option<String>,
        /// Route every request to the deterministic mock backend.
        #[arg(long)]
        offline: bool,
    },
    /// Print the default prompt template as TOML.
    PrintTemplate,
    /// Parse a config file and check every invariant.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Batch input paths may also live in the config file; flags win.
#[derive(Debug, Default, serde::Deserialize)]
struct BatchPaths {
    reports_dir: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
}

/// Parse `argv` and execute, writing normal output to `stdout` and errors
/// to `stderr`. Returns the process exit code: 0 success, 1 partial
/// failure, 2 fatal or usage error.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(error) => {
            // clap renders --help/--version on stdout with exit 0 and
            // usage errors on stderr with exit 2.
            let code = error.exit_code();
            let rendered = error.render();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(error) => {
            let _ = writeln!(stderr, "error: {error:#}");
            2
        }
    }
}

/// [`run_with`] wired to the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    run_with(argv, &mut stdout, &mut stderr)
}

fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Summarize {
            report,
            config,
            model,
            offline,
        } => cmd_summarize(&report, config.as_deref(), model.as_deref(), offline, out),
        Command::Evaluate {
            generated,
            reference,
            config,
            offline,
            keyphrase_k,
        } => cmd_evaluate(
            &generated,
            &reference,
            config.as_deref(),
            offline,
            keyphrase_k,
            out,
        ),
        Command::Batch {
            config,
            reports_dir,
            ground_truth,
            output_dir,
            parallelism,
            model,
            offline,
        } => cmd_batch(
            &config,
            reports_dir,
            ground_truth,
            output_dir,
            parallelism,
            model.as_deref(),
            offline,
            out,
        ),
        Command::PrintTemplate => {
            write!(out, "{}", PromptTemplate::default_toml())?;
            Ok(0)
        }
        Command::ValidateConfig { config } => cmd_validate(&config, out),
    }
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let config = RunConfig::load(path)?;
    config.validate()?;
    Ok(config)
}

fn make_gateway(offline: bool) -> anyhow::Result<Gateway<Box<dyn InferenceBackend>>> {
    let backend: Box<dyn InferenceBackend> = if offline {
        Box::new(MockBackend::new())
    } else {
        Box::new(HttpBackend::with_default_timeout()?)
    };
    Ok(Gateway::new(backend))
}

fn pick_profile<'a>(
    profiles: &'a [ModelProfile],
    model: Option<&str>,
) -> anyhow::Result<&'a ModelProfile> {
    match model {
        None => Ok(&profiles[0]),
        Some(name) => profiles
            .iter()
            .find(|p| p.model_name == name)
            .with_context(|| format!("no profile named {name:?} in config")),
    }
}

fn cmd_summarize(
    report_path: &Path,
    config: Option<&Path>,
    model: Option<&str>,
    offline: bool,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let config = match config {
        Some(path) => load_config(path)?,
        None if offline => RunConfig::offline(&["mock-model"], PathBuf::from("out")),
        None => bail!("summarize needs --config (or --offline for the mock backend)"),
    };
    let profile = pick_profile(&config.profiles, model)?;
    let raw = std::fs::read_to_string(report_path)
        .with_context(|| format!("cannot read report {}", report_path.display()))?;
    let report = parse_report(&raw)?;
    let gateway = make_gateway(offline)?;
    let output = summarize(
        &report,
        &config.distillation,
        &config.template,
        profile,
        &gateway,
    )?;
    writeln!(out, "{}", output.summary.rendered())?;
    log::info!(
        "summarized {} with {} in {} ms ({} attempts)",
        output.summary.sample_id,
        output.summary.model_name,
        output.exchange.latency_ms,
        output.exchange.attempts
    );
    Ok(0)
}

fn cmd_evaluate(
    generated_path: &Path,
    reference_path: &Path,
    config: Option<&Path>,
    offline: bool,
    keyphrase_k: Option<usize>,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let generated = std::fs::read_to_string(generated_path)
        .with_context(|| format!("cannot read {}", generated_path.display()))?;
    let reference = std::fs::read_to_string(reference_path)
        .with_context(|| format!("cannot read {}", reference_path.display()))?;

    let config = config.map(load_config).transpose()?;
    let k = keyphrase_k
        .or_else(|| config.as_ref().map(|c| c.keyphrase_k))
        .unwrap_or(10);

    let evaluation = match (&config, offline) {
        // A config without --offline scores through its embedder endpoint.
        (Some(config), false) => {
            let gateway = make_gateway(false)?;
            let embedder = EmbeddingProvider::new(&gateway, &config.embedder_profile);
            let providers = PairProviders {
                token_embedder: &embedder,
                text_embedder: &embedder,
                keyphrase_k: k,
            };
            evaluate_pair(&generated, &reference, &providers)?
        }
        _ => {
            let mock = MockBackend::new();
            let providers = PairProviders {
                token_embedder: &mock,
                text_embedder: &mock,
                keyphrase_k: k,
            };
            evaluate_pair(&generated, &reference, &providers)?
        }
    };

    if !evaluation.flags.is_empty() {
        log::warn!("evaluation flags: {}", evaluation.flags.join(", "));
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&evaluation.metrics)?
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_batch(
    config_path: &Path,
    reports_dir: Option<PathBuf>,
    ground_truth: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    parallelism: Option<usize>,
    model: Option<&str>,
    offline: bool,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let mut config = load_config(config_path)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    if let Some(workers) = parallelism {
        config.parallelism = workers;
    }
    if let Some(name) = model {
        config.profiles.retain(|p| p.model_name == name);
        if config.profiles.is_empty() {
            bail!("no profile named {name:?} in config");
        }
    }
    config.validate()?;

    // Input paths: flags override the optional config keys.
    let raw = std::fs::read_to_string(config_path)?;
    let paths: BatchPaths = toml::from_str(&raw).unwrap_or_default();
    let reports_dir = reports_dir
        .or(paths.reports_dir)
        .context("batch needs --reports-dir (flag or config key)")?;
    let ground_truth_path = ground_truth
        .or(paths.ground_truth)
        .context("batch needs --ground-truth (flag or config key)")?;

    let entries = load_ground_truth(&ground_truth_path)?;
    let gateway = make_gateway(offline)?.with_max_in_flight(config.parallelism);
    let outcome = run_batch(&config, &reports_dir, &entries, &gateway)?;

    if let Some(table) = &outcome.table {
        writeln!(out, "{table}")?;
    }
    writeln!(
        out,
        "{} ok, {} failed, {} skipped -> {}",
        outcome.ok_count,
        outcome.error_count,
        outcome.skipped_samples.len(),
        outcome.records_path.display()
    )?;
    Ok(if outcome.error_count > 0 { 1 } else { 0 })
}

fn cmd_validate(config_path: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    let config = load_config(config_path)?;
    writeln!(
        out,
        "config ok: {} profile(s), embedder {}, output {}",
        config.profiles.len(),
        config.embedder_profile.model_name,
        config.output_dir.display()
    )?;
    Ok(0)
}
