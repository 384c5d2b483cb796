//! Command-line entry points. Every `cmd_*` function is callable in-process;
//! [`run`] adds argument handling and maps outcomes to exit codes:
//! 0 success, 1 completed with warnings, 2 input or configuration error.

mod commands;
mod config;
mod ledger;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_bias_report, cmd_evaluate, cmd_index, cmd_mix_triples, cmd_search, cmd_timing_report, load_merged_qrels,
    EvaluateOptions, EvaluationReport, IndexMeta, Outcome, SearchOptions, SignificanceTest, INDEX_META, LEDGER_CSV,
    LEDGER_JSON, RUN_FILE, SPARSE_INDEX, STORE_BIN, STORE_SIDECAR,
};
pub use config::{LangPath, MixSection, PipelineConfig, RetrievalMode};
pub use ledger::{relative_reduction, timing_report, ConfigurationCost, Reduction, TimingLedger, TimingReport};

use crate::error::{Error, Result};
use crate::mixer::MixMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_WARNINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mlir-kit", version, about = "Multilingual retrieval: indexing, search, evaluation, bias and cost reports")]
pub struct Cli {
    /// TOML pipeline configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index or an embedding store from a JSONL corpus.
    Index(IndexArgs),
    /// Rank topics against an index and write a TREC run.
    Search(SearchArgs),
    /// Score a run against per-language qrels.
    Evaluate(EvaluateArgs),
    /// Per-language recall distributions and KS score-distribution tests.
    BiasReport(BiasArgs),
    /// Compare indexing ledgers: per-document cost and relative reductions.
    TimingReport(TimingArgs),
    /// Combine aligned triple files and schedule training batches.
    MixTriples(MixArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<RetrievalMode>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Externally measured translation time to record in the ledger.
    #[arg(long)]
    pub translation_seconds: Option<f64>,
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// Index directory (defaults to the output directory).
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Embedding file with one entry per query id.
    #[arg(long)]
    pub query_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub run_file: Option<PathBuf>,
    #[arg(long)]
    pub stop_structure: Option<PathBuf>,
    /// Keep topic boilerplate.
    #[arg(long)]
    pub no_stop_structure: bool,
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Debug, Args)]
pub struct QrelsArgs {
    /// Per-language qrels as LANG=PATH; repeatable.
    #[arg(long = "qrels")]
    pub qrels: Vec<LangPath>,
    /// Corpus used to look up languages of unjudged documents.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub qrels: QrelsArgs,
    /// Baseline run for paired t-tests.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub bonferroni: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[command(flatten)]
    pub qrels: QrelsArgs,
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    /// Ledger JSON files; repeatable.
    #[arg(long = "ledger", required = true)]
    pub ledgers: Vec<PathBuf>,
    /// MAP of a configuration as LABEL=VALUE; repeatable.
    #[arg(long = "map", value_parser = parse_label_value)]
    pub maps: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Per-language triple files as LANG=PATH in rotation order; repeatable.
    #[arg(long = "triples")]
    pub triples: Vec<LangPath>,
    #[arg(long, value_parser = parse_mix_mode)]
    pub mode: Option<MixMode>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long)]
    pub replicas: Option<usize>,
}

fn parse_label_value(s: &str) -> std::result::Result<(String, f64), String> {
    let (label, value) = s.split_once('=').ok_or_else(|| format!("expected LABEL=VALUE, got {s:?}"))?;
    let value: f64 = value.parse().map_err(|e| format!("{value:?}: {e}"))?;
    Ok((label.to_string(), value))
}

fn parse_mix_mode(s: &str) -> std::result::Result<MixMode, String> {
    match s {
        "et" => Ok(MixMode::Et),
        "mtt-m" => Ok(MixMode::MttM),
        "mtt-s" => Ok(MixMode::MttS),
        _ => Err(format!("unknown mix mode {s:?}; expected et, mtt-m or mtt-s")),
    }
}

fn apply_qrels(cfg: &mut PipelineConfig, args: QrelsArgs) {
    if !args.qrels.is_empty() {
        cfg.qrels = args.qrels;
    }
    if args.corpus.is_some() {
        cfg.corpus = args.corpus;
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn dispatch(cli: Cli) -> Result<Vec<String>> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.output, cli.output);
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("thread pool already initialised; --threads ignored");
        }
    }
    let warnings = match cli.command {
        Command::Index(a) => {
            if a.corpus.is_some() {
                cfg.corpus = a.corpus;
            }
            set(&mut cfg.mode, a.mode);
            set(&mut cfg.dim, a.dim);
            set(&mut cfg.window, a.window);
            set(&mut cfg.stride, a.stride);
            set(&mut cfg.translation_seconds, a.translation_seconds);
            if a.tag.is_some() {
                cfg.tag = a.tag;
            }
            cmd_index(&cfg)?.warnings
        }
        Command::Search(a) => {
            if a.topics.is_some() {
                cfg.topics = a.topics;
            }
            set(&mut cfg.k, a.k);
            if a.stop_structure.is_some() {
                cfg.stop_structure = a.stop_structure;
            }
            if a.no_stop_structure {
                cfg.strip_stop_structure = false;
            }
            if a.tag.is_some() {
                cfg.tag = a.tag;
            }
            let opts = SearchOptions {
                index_dir: a.index,
                query_embeddings: a.query_embeddings,
                run_file: a.run_file,
            };
            cmd_search(&cfg, &opts)?.warnings
        }
        Command::Evaluate(a) => {
            apply_qrels(&mut cfg, a.qrels);
            set(&mut cfg.bonferroni, a.bonferroni);
            let opts = EvaluateOptions { run: a.run, baseline: a.baseline };
            cmd_evaluate(&cfg, &opts)?.warnings
        }
        Command::BiasReport(a) => {
            apply_qrels(&mut cfg, a.qrels);
            set(&mut cfg.reference_lang, a.reference);
            cmd_bias_report(&cfg, &a.run)?.warnings
        }
        Command::TimingReport(a) => {
            let maps: BTreeMap<String, f64> = a.maps.into_iter().collect();
            cmd_timing_report(&a.ledgers, &maps, &cfg.output)?.warnings
        }
        Command::MixTriples(a) => {
            if !a.triples.is_empty() {
                cfg.mix.triples = a.triples;
            }
            set(&mut cfg.mix.mode, a.mode);
            set(&mut cfg.mix.batch_size, a.batch_size);
            set(&mut cfg.mix.replicas, a.replicas);
            if a.shuffle {
                cfg.mix.shuffle = true;
            }
            cmd_mix_triples(&cfg)?.warnings
        }
    };
    Ok(warnings)
}

/// Runs a parsed command line, reporting on stderr, and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(warnings) if warnings.is_empty() => EXIT_OK,
        Ok(warnings) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            EXIT_WARNINGS
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Parses `args` (program name first) and runs; usage errors exit with 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
