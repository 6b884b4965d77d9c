//! The `vaxlens` command line: argument parsing, artifact plumbing and one
//! function per subcommand.

mod analyze;
mod ingest;
mod modeling;
pub mod render;
mod report;
mod topics;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::learn::SCHEMA_VERSION;
use crate::lexicon::Lexicons;

#[derive(Debug, Parser)]
#[command(name = "vaxlens", version, about = "Characterize and classify misleading vaccination tweets")]
pub struct Cli {
    /// Master seed; every stochastic step derives its own stream from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Directory receiving all artifacts (created if absent).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel steps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory with replacement lexicon files.
    #[arg(long, global = true)]
    pub lexicon_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalise a corpus file into corpus.jsonl.
    Ingest(IngestArgs),
    /// Per-tweet features, class comparisons and distribution reports.
    Analyze(AnalyzeArgs),
    /// LDA topics per class and over class x sentiment / emotion grids.
    Topics(TopicsArgs),
    /// Train and cross-validate a classifier on features.csv.
    Train(TrainArgs),
    /// Shapley attributions and feature ranking for the trained model.
    Explain(ExplainArgs),
    /// Retrain after dropping low-ranked features.
    Ablate(AblateArgs),
    /// Collect the text reports into report.md.
    Report,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Corpus to analyze [default: <out>/corpus.jsonl].
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// CSV of per-item category counts from several annotators, for Fleiss' kappa.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Size of each class's top-word list for the rank agreement.
    #[arg(long, default_value_t = 50)]
    pub top_words: usize,
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Fixed topic count; skips the grid search.
    #[arg(long)]
    pub k: Option<usize>,
    /// Candidate topic counts for the grid search.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    /// Words listed per topic.
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    /// Skip the class x sentiment and class x emotion grids.
    #[arg(long)]
    pub no_grids: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ModelKind {
    Dt,
    Rf,
    Et,
    Bagging,
    Knn,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature matrix [default: <out>/features.csv].
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rf")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    /// Neighbours for kNN.
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    /// Also cross-validate every other model kind for a comparison table.
    #[arg(long)]
    pub suite: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Trained model [default: <out>/model.json].
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or unreadable input.
    #[error("{0}")]
    Input(String),
    /// A required upstream artifact is missing or too new.
    #[error("{0}")]
    Precondition(String),
    /// A result failed an internal consistency check.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

pub(crate) fn input_err(e: impl Display) -> CliError {
    CliError::Input(e.to_string())
}

/// Shared state for one invocation.
pub(crate) struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub lexicons: Lexicons,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Reads an artifact produced by an earlier subcommand.
pub(crate) fn read_upstream(path: &Path, what: &str, producer: &str) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::Precondition(format!(
            "{what} not found: expected {} (run `vaxlens {producer}` first)",
            path.display()
        )));
    }
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Refuses JSON artifacts written by a newer version of the tool.
pub(crate) fn check_schema(text: &str, path: &Path) -> Result<serde_json::Value, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("{} is not valid JSON: {e}", path.display())))?;
    if let Some(v) = value.get("schema_version").and_then(serde_json::Value::as_u64) {
        if v > u64::from(SCHEMA_VERSION) {
            return Err(CliError::Precondition(format!(
                "{} has schema_version {v}, newer than the supported {SCHEMA_VERSION}",
                path.display()
            )));
        }
    }
    Ok(value)
}

/// Checks the schema of a sidecar report if it exists.
pub(crate) fn check_sidecar(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        let text = fs::read_to_string(path).map_err(input_err)?;
        check_schema(&text, path)?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot configure {n} threads: {e}")))?;
    }
    let lexicons = match &cli.lexicon_dir {
        Some(dir) => Lexicons::from_dir(dir).map_err(input_err)?,
        None => Lexicons::bundled(),
    };
    fs::create_dir_all(&cli.out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", cli.out.display())))?;
    let ctx = Context { out: cli.out.clone(), seed: cli.seed, lexicons };
    match &cli.command {
        Command::Ingest(args) => ingest::run(&ctx, args),
        Command::Analyze(args) => analyze::run(&ctx, args),
        Command::Topics(args) => topics::run(&ctx, args),
        Command::Train(args) => modeling::train(&ctx, args),
        Command::Explain(args) => modeling::explain(&ctx, args),
        Command::Ablate(args) => modeling::ablate(&ctx, args),
        Command::Report => report::run(&ctx),
    }
}
