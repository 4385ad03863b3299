mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::UsageError;

#[derive(Debug, Parser)]
#[command(name = "proxyexp", version, about = "Train and evaluate sparse linear proxies of black-box text classifiers")]
struct Cli {
    /// Seed for every stochastic step; per-module streams are derived from it.
    #[arg(long, global = true, default_value_t = 13)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a planted log-linear black box.
    Synth(SynthArgs),
    /// Fit one sparse regressor per code to the black box's log-probabilities.
    TrainProxy(TrainProxyArgs),
    /// Fit one L1 logistic regression per code to the true labels.
    TrainLogistic(TrainLogisticArgs),
    /// Compare model outputs with the black box's probabilities.
    EvalFaithfulness(EvalFaithfulnessArgs),
    /// Score model outputs against the true labels.
    EvalLabels(EvalLabelsArgs),
    /// Extract one token-span explanation per (document, code).
    Explain(ExplainArgs),
    /// Evaluate the annotation classifier or score explanation files with it.
    Plausibility(PlausibilityArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    n_docs: usize,
    #[arg(long, default_value_t = 500)]
    vocab_size: usize,
    #[arg(long, default_value_t = 20)]
    n_codes: usize,
    #[arg(long, default_value_t = 5)]
    min_doc_len: usize,
    #[arg(long, default_value_t = 75)]
    max_doc_len: usize,
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    noise_sd: f64,
    /// Also write a separable annotation fixture with its embeddings.
    #[arg(long)]
    plausibility: bool,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Corpus JSONL: {"doc_id", "text", "labels"} per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Split TSV: doc_id, train|validation|test.
    #[arg(long)]
    splits: PathBuf,
    /// Code TSV: code, description.
    #[arg(long)]
    codes: PathBuf,
    /// Vocabulary keeps train-split tokens seen in at least this many documents.
    #[arg(long, default_value_t = proxyexp::corpus::DEFAULT_MIN_DOC_FREQ)]
    min_doc_freq: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 1e-4, value_parser = non_negative)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    eta0: f64,
    #[arg(long, default_value_t = 0.25, value_parser = non_negative)]
    power_t: f64,
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    clamp_eps: f64,
    /// Use token presence instead of counts.
    #[arg(long)]
    binary_features: bool,
}

#[derive(Debug, Args)]
struct TrainProxyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Black-box prediction matrix (JSONL).
    #[arg(long)]
    predictions: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
    /// Choose alpha on the validation split instead of using --alpha.
    #[arg(long)]
    grid: bool,
    #[arg(long, value_delimiter = ',', default_values_t = proxyexp::proxy::DEFAULT_ALPHA_GRID, value_parser = non_negative)]
    alpha_grid: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainLogisticArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    proxy: Option<PathBuf>,
    #[arg(long)]
    logistic: Option<PathBuf>,
    /// Extra prediction matrices to evaluate, as NAME=PATH.
    #[arg(long = "candidate", value_parser = named_path)]
    candidates: Vec<(String, PathBuf)>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Write the report here as well as to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a tab-separated table here.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalFaithfulnessArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long)]
    predictions: PathBuf,
    /// Black-box probability at which a code counts as predicted.
    #[arg(long, default_value_t = proxyexp::blackbox::DEFAULT_THRESHOLD, value_parser = unit_open)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct EvalLabelsArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long = "k", value_delimiter = ',', default_values_t = [8usize, 15])]
    ks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

impl From<SplitArg> for proxyexp::Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => proxyexp::Split::Train,
            SplitArg::Validation => proxyexp::Split::Validation,
            SplitArg::Test => proxyexp::Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Source {
    Proxy,
    Logistic,
    Dump,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Coefficient,
    CountWeighted,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    source: Source,
    /// Model file for --source proxy or logistic.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Importance dump JSONL for --source dump.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Embedding table for --source cosine.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Model name recorded in each explanation; defaults to the source.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Coefficient)]
    mode: ModeArg,
    /// Documents to explain; defaults to every document of --split.
    #[arg(long, value_delimiter = ',')]
    docs: Vec<String>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Codes to explain; defaults to each document's true codes.
    #[arg(long = "code", value_delimiter = ',', conflicts_with = "all_codes")]
    codes_filter: Vec<String>,
    /// Explain every code for every document.
    #[arg(long)]
    all_codes: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    E1,
    E2,
    Full,
}

#[derive(Debug, Args)]
struct PlausibilityArgs {
    /// Annotation JSONL: {"example_id", "code", "explanation", "rating"} per line.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Code descriptions for annotations and explanations.
    #[arg(long)]
    codes: PathBuf,
    #[arg(long, value_enum, default_value_t = ProtocolArg::E2)]
    protocol: ProtocolArg,
    /// Explanation files to score in full mode.
    #[arg(long = "explanations")]
    explanations: Vec<PathBuf>,
    #[arg(long, default_value_t = proxyexp::plausibility::DEFAULT_TARGET_RATE, value_parser = unit_open)]
    target_rate: f64,
    #[arg(long, default_value_t = proxyexp::plausibility::DEFAULT_BOOTSTRAP_SAMPLES)]
    bootstrap: usize,
    #[arg(long, default_value_t = proxyexp::plausibility::DEFAULT_LEVEL, value_parser = unit_open)]
    level: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    l2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not finite"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be >= 0"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be > 0"))
    }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie strictly between 0 and 1"))
    }
}

fn named_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_owned(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
