use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, RetrievalMode};
use super::ledger::{timing_report, Stopwatch, TimingLedger, TimingReport};
use crate::dense::{dense_search, EmbeddingFile, EmbeddingStore, QueryEmbedding, StoreMode, TokenMatrix, ToyEmbedder};
use crate::error::{Error, Result};
use crate::eval::{
    bias_report, bonferroni_adjust, evaluate, load_qrels, merge_qrels, paired_t_test, BiasReport, Evaluation,
    MergedQrels, Run,
};
use crate::mixer::{build_schedule, emit_combined, LangStream, MixConfig, MixSchedule};
use crate::sparse::{index_tokens, sparse_search, InvertedIndex};
use crate::text::{analyze, read_corpus, read_topics, split_passages, StopStructure};

pub const INDEX_META: &str = "index_meta.json";
pub const SPARSE_INDEX: &str = "index.json";
pub const STORE_BIN: &str = "store.mlke";
pub const STORE_SIDECAR: &str = "store.passages.jsonl";
pub const LEDGER_JSON: &str = "ledger.json";
pub const LEDGER_CSV: &str = "ledger.csv";
pub const RUN_FILE: &str = "run.trec";

/// What a command produced; any warning turns the exit code into 1.
#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub value: T,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl<T> Outcome<T> {
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            1
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>, files: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    files.push(path.to_path_buf());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// How the index was built; search reads it back to analyze and embed
/// queries the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub mode: RetrievalMode,
    pub analyzer: crate::text::AnalyzerConfig,
    pub dim: usize,
    pub seed: u64,
    pub window: usize,
    pub stride: usize,
    pub doc_count: usize,
    pub passages: usize,
}

impl IndexMeta {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(INDEX_META);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Input(format!("no index at {}: {e}", dir.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e))
    }
}

/// Builds the sparse index or the embedding store and records stage times.
pub fn cmd_index(cfg: &PipelineConfig) -> Result<Outcome<TimingLedger>> {
    cfg.validate()?;
    let corpus = cfg.require(&cfg.corpus, "corpus")?;
    let out = &cfg.output;
    let mut files = Vec::new();

    let mut sw = Stopwatch::start();
    let docs = read_corpus(corpus)?;
    let mut ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateDoc(w[0].to_string()));
    }
    let (text_secs, repr_secs, build_secs, passages);
    match cfg.mode {
        RetrievalMode::Bm25 => {
            let analyzed: Vec<(String, Vec<String>)> = docs
                .par_iter()
                .map(|d| (d.id.clone(), analyze(&d.text, &d.lang, &cfg.analyzer)))
                .collect();
            text_secs = sw.lap();
            repr_secs = 0.0;
            passages = 0;
            let index = index_tokens(analyzed, &cfg.analyzer, cfg.bm25)?;
            std::fs::create_dir_all(out)?;
            index.save(&out.join(SPARSE_INDEX))?;
            files.push(out.join(SPARSE_INDEX));
            build_secs = sw.lap();
        }
        RetrievalMode::Maxsim | RetrievalMode::SingleVector => {
            let split = docs
                .par_iter()
                .map(|d| split_passages(d, cfg.window, cfg.stride, &cfg.analyzer))
                .collect::<Result<Vec<_>>>()?;
            let all: Vec<_> = split.into_iter().flatten().collect();
            text_secs = sw.lap();
            let embedder = ToyEmbedder::new(cfg.dim, cfg.seed)?;
            let single = cfg.mode == RetrievalMode::SingleVector;
            let embedded = all
                .into_par_iter()
                .map_init(
                    || embedder.clone(),
                    |e, p| {
                        let id = format!("{}#{}", p.doc_id, p.index);
                        let m = if single {
                            let v = e.embed_single(&id, &p.tokens)?;
                            TokenMatrix::new(id, v.dim(), v.as_slice().to_vec())?
                        } else {
                            e.embed(&id, &p.tokens)?
                        };
                        Ok((p, m))
                    },
                )
                .collect::<Result<Vec<_>>>()?;
            repr_secs = sw.lap();
            passages = embedded.len();
            let mode = if single { StoreMode::SingleVectors } else { StoreMode::TokenMatrices };
            let store = EmbeddingStore::from_passages(mode, cfg.dim, embedded)?;
            std::fs::create_dir_all(out)?;
            store.save(&out.join(STORE_BIN), &out.join(STORE_SIDECAR))?;
            files.push(out.join(STORE_BIN));
            files.push(out.join(STORE_SIDECAR));
            build_secs = sw.lap();
        }
    }
    let meta = IndexMeta {
        mode: cfg.mode,
        analyzer: cfg.analyzer.clone(),
        dim: cfg.dim,
        seed: cfg.seed,
        window: cfg.window,
        stride: cfg.stride,
        doc_count: docs.len(),
        passages,
    };
    write_file(&out.join(INDEX_META), to_json(&meta)?, &mut files)?;
    let ledger = TimingLedger::new(cfg.tag(), docs.len(), cfg.translation_seconds, text_secs, repr_secs, build_secs)?;
    write_file(&out.join(LEDGER_JSON), to_json(&ledger)?, &mut files)?;
    write_file(&out.join(LEDGER_CSV), ledger.to_csv(), &mut files)?;
    log::info!("indexed {} documents in {:.3} s", docs.len(), ledger.total_seconds);
    Ok(Outcome { value: ledger, files, warnings: Vec::new() })
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    /// Directory holding the index; defaults to the configured output.
    pub index_dir: Option<PathBuf>,
    /// Precomputed query embeddings keyed by query id, instead of toy embeddings.
    pub query_embeddings: Option<PathBuf>,
    /// Defaults to `run.trec` in the output directory.
    pub run_file: Option<PathBuf>,
}

enum Searcher {
    Sparse(InvertedIndex),
    Dense {
        store: EmbeddingStore,
        provided: Option<EmbeddingFile>,
        embedder: ToyEmbedder,
    },
}

/// Ranks every topic against the index and writes a TREC run.
pub fn cmd_search(cfg: &PipelineConfig, opts: &SearchOptions) -> Result<Outcome<Run>> {
    cfg.validate()?;
    let index_dir = opts.index_dir.as_deref().unwrap_or(&cfg.output);
    let meta = IndexMeta::load(index_dir)?;
    let topics = read_topics(cfg.require(&cfg.topics, "topics")?)?;
    let stop = match &cfg.stop_structure {
        Some(p) => StopStructure::load(p)?,
        None => StopStructure::builtin(),
    };
    let searcher = match meta.mode {
        RetrievalMode::Bm25 => Searcher::Sparse(InvertedIndex::load(&index_dir.join(SPARSE_INDEX))?),
        RetrievalMode::Maxsim | RetrievalMode::SingleVector => Searcher::Dense {
            store: EmbeddingStore::load(&index_dir.join(STORE_BIN), &index_dir.join(STORE_SIDECAR))?,
            provided: opts.query_embeddings.as_deref().map(EmbeddingFile::load).transpose()?,
            embedder: ToyEmbedder::new(meta.dim, meta.seed)?,
        },
    };
    let tag = cfg.tag.clone().unwrap_or_else(|| meta.mode.name().to_string());
    let mut run = Run::new(tag);
    let mut warnings = Vec::new();
    let mut searcher = searcher;
    for topic in &topics {
        let query = if cfg.strip_stop_structure {
            match stop.strip(topic) {
                Ok(q) => q,
                Err(Error::EmptyQuery { id }) => {
                    warnings.push(format!("topic {id} is empty after stop-structure removal; skipped"));
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            topic.clone()
        };
        let ranked = match &mut searcher {
            Searcher::Sparse(index) => sparse_search(&query, index, cfg.k, &meta.analyzer),
            Searcher::Dense { store, provided, embedder } => {
                let embedding = match provided {
                    Some(file) => match file.get(&query.id) {
                        Some(m) => query_embedding(store.mode(), m.clone()),
                        None => {
                            warnings.push(format!("topic {} has no query embedding; skipped", query.id));
                            continue;
                        }
                    },
                    None => {
                        let tokens = analyze(&query.full_text(), &query.lang, &meta.analyzer);
                        if tokens.is_empty() {
                            Err(Error::EmptyQuery { id: query.id.clone() })
                        } else if store.mode() == StoreMode::SingleVectors {
                            embedder.embed_single(&query.id, &tokens).map(QueryEmbedding::Vector)
                        } else {
                            embedder.embed(&query.id, &tokens).map(QueryEmbedding::Matrix)
                        }
                    }
                };
                embedding.and_then(|q| dense_search(&q, store, store.mode().scorer(), cfg.k))
            }
        };
        match ranked {
            Ok(list) => run.insert(query.id.clone(), list)?,
            Err(Error::EmptyQuery { id }) => {
                warnings.push(format!("topic {id} has no terms after analysis; skipped"));
            }
            Err(e) => return Err(e),
        }
    }
    let path = opts.run_file.clone().unwrap_or_else(|| cfg.output.join(RUN_FILE));
    let mut files = Vec::new();
    write_file(&path, run.to_trec(), &mut files)?;
    Ok(Outcome { value: run, files, warnings })
}

fn query_embedding(mode: StoreMode, m: TokenMatrix) -> Result<QueryEmbedding> {
    match mode {
        StoreMode::TokenMatrices => Ok(QueryEmbedding::Matrix(m)),
        StoreMode::SingleVectors if m.n_rows() == 1 => {
            Ok(QueryEmbedding::Vector(crate::dense::SingleVector::new(m.id(), m.as_slice().to_vec())?))
        }
        StoreMode::SingleVectors => Err(Error::Input(format!(
            "query embedding {} has {} rows for a single-vector index",
            m.id(),
            m.n_rows()
        ))),
    }
}

/// Merges the configured per-language qrels, taking unjudged documents'
/// languages from the corpus when one is configured.
pub fn load_merged_qrels(cfg: &PipelineConfig) -> Result<MergedQrels> {
    let per_lang = cfg
        .require_qrels()?
        .iter()
        .map(|lp| Ok((lp.lang.clone(), load_qrels(&lp.path)?)))
        .collect::<Result<Vec<_>>>()?;
    let doc_lang = match cfg.corpus.as_deref() {
        Some(p) if p.exists() => Some(
            read_corpus(p)?
                .into_iter()
                .map(|d| (d.id, d.lang))
                .collect::<BTreeMap<_, _>>(),
        ),
        _ => None,
    };
    merge_qrels(&per_lang, doc_lang.as_ref())
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceTest {
    pub metric: String,
    pub queries: usize,
    pub t: f64,
    pub p: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub evaluation: Evaluation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    pub bonferroni: usize,
    pub significance: Vec<SignificanceTest>,
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let e = &self.evaluation;
        let langs: Vec<&String> = e.recall_mlir.keys().collect();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("query,ap,p10,r_precision,relevant");
        for l in &langs {
            let _ = write!(out, ",recall_mlir_{l}");
        }
        out.push('\n');
        for (qid, q) in &e.per_query {
            let _ = write!(out, "{qid},{},{},{},{}", q.ap, q.p10, q.r_precision, q.relevant);
            for l in &langs {
                let _ = write!(out, ",{}", opt(q.recall_mlir[*l]));
            }
            out.push('\n');
        }
        let _ = write!(out, "all,{},{},{},", e.map, e.p10, e.r_precision);
        for l in &langs {
            let _ = write!(out, ",{}", opt(e.recall_mlir[*l]));
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvaluateOptions {
    pub run: PathBuf,
    pub baseline: Option<PathBuf>,
}

/// Aggregate and per-query metrics, plus paired t-tests against a baseline.
pub fn cmd_evaluate(cfg: &PipelineConfig, opts: &EvaluateOptions) -> Result<Outcome<EvaluationReport>> {
    cfg.validate()?;
    let qrels = load_merged_qrels(cfg)?;
    let run = Run::load(&opts.run)?;
    let evaluation = evaluate(&run, &qrels)?;
    let mut warnings = Vec::new();
    if !evaluation.missing_queries.is_empty() {
        warnings.push(format!("run lacks judged queries {:?}", evaluation.missing_queries));
    }
    let unjudged: Vec<&str> = run.query_ids().filter(|q| !evaluation.per_query.contains_key(*q)).collect();
    if !unjudged.is_empty() {
        warnings.push(format!("queries without relevant judgments ignored: {unjudged:?}"));
    }
    let mut significance = Vec::new();
    let mut baseline_tag = None;
    if let Some(path) = &opts.baseline {
        let base = evaluate(&Run::load(path)?, &qrels)?;
        baseline_tag = Some(base.tag.clone());
        let common: Vec<&String> = evaluation.per_query.keys().filter(|q| base.per_query.contains_key(*q)).collect();
        if common.len() < 2 {
            warnings.push(format!("only {} queries shared with the baseline; no t-test", common.len()));
        } else {
            let metrics: [(&str, fn(&crate::eval::QueryMetrics) -> f64); 3] =
                [("ap", |q| q.ap), ("p10", |q| q.p10), ("r_precision", |q| q.r_precision)];
            for (name, get) in metrics {
                let a: Vec<f64> = common.iter().map(|q| get(&evaluation.per_query[*q])).collect();
                let b: Vec<f64> = common.iter().map(|q| get(&base.per_query[*q])).collect();
                let t = paired_t_test(&a, &b)?;
                significance.push(SignificanceTest {
                    metric: name.into(),
                    queries: common.len(),
                    t: t.t,
                    p: t.p,
                    p_adjusted: bonferroni_adjust(&[t.p], cfg.bonferroni)?[0],
                });
            }
        }
    }
    let report = EvaluationReport {
        evaluation,
        baseline: baseline_tag,
        bonferroni: cfg.bonferroni,
        significance,
    };
    let stem = stem_of(&opts.run);
    let mut files = Vec::new();
    write_file(&cfg.output.join(format!("{stem}.metrics.json")), to_json(&report)?, &mut files)?;
    write_file(&cfg.output.join(format!("{stem}.metrics.csv")), report.to_csv(), &mut files)?;
    Ok(Outcome { value: report, files, warnings })
}

/// Writes the bias report for `run` as JSON and CSV.
pub fn cmd_bias_report(cfg: &PipelineConfig, run: &Path) -> Result<Outcome<BiasReport>> {
    cfg.validate()?;
    let qrels = load_merged_qrels(cfg)?;
    let run_data = Run::load(run)?;
    let report = bias_report(&run_data, &qrels, &cfg.reference_lang)?;
    let mut warnings = Vec::new();
    if run_data.is_empty() {
        warnings.push("run is empty; every entry is undefined".to_string());
    } else if !report.missing_topics.is_empty() {
        warnings.push(format!("run lacks judged topics {:?}", report.missing_topics));
    }
    let stem = stem_of(run);
    let mut files = Vec::new();
    write_file(&cfg.output.join(format!("{stem}.bias.json")), to_json(&report)?, &mut files)?;
    write_file(&cfg.output.join(format!("{stem}.bias.csv")), report.to_csv(), &mut files)?;
    Ok(Outcome { value: report, files, warnings })
}

/// Per-document costs and pairwise reductions over saved ledgers. `maps`
/// attaches MAP values by ledger label.
pub fn cmd_timing_report(ledgers: &[PathBuf], maps: &BTreeMap<String, f64>, output: &Path) -> Result<Outcome<TimingReport>> {
    let mut loaded = ledgers.iter().map(|p| TimingLedger::load(p)).collect::<Result<Vec<_>>>()?;
    for l in &mut loaded {
        if let Some(&m) = maps.get(&l.label) {
            l.map = Some(m);
        }
    }
    if let Some(label) = maps.keys().find(|k| !loaded.iter().any(|l| &l.label == *k)) {
        return Err(Error::Config(format!("MAP given for unknown configuration {label}")));
    }
    let report = timing_report(&loaded)?;
    let mut files = Vec::new();
    write_file(&output.join("timing_report.json"), to_json(&report)?, &mut files)?;
    write_file(&output.join("timing_report.csv"), report.reductions_csv(), &mut files)?;
    write_file(&output.join("scatter.csv"), report.scatter_csv(), &mut files)?;
    let warnings = report.warnings.clone();
    Ok(Outcome { value: report, files, warnings })
}

/// Writes the combined TSV and the batch manifest for the configured triples.
pub fn cmd_mix_triples(cfg: &PipelineConfig) -> Result<Outcome<MixSchedule>> {
    let mix = &cfg.mix;
    if mix.triples.is_empty() {
        return Err(Error::Config("no triple files configured".into()));
    }
    let config = MixConfig {
        mode: mix.mode,
        languages: mix.triples.iter().map(|lp| lp.lang.clone()).collect(),
        batch_size: mix.batch_size,
        seed: cfg.seed,
        shuffle: mix.shuffle,
        replicas: mix.replicas,
    };
    config.validate()?;
    let texts = mix
        .triples
        .iter()
        .map(|lp| {
            std::fs::read_to_string(&lp.path)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", lp.path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = mix.triples.iter().map(|lp| lp.path.display().to_string()).collect();
    let inputs: Vec<(&str, &str)> = names.iter().map(String::as_str).zip(texts.iter().map(String::as_str)).collect();
    let combined = emit_combined(&inputs)?;
    let streams = mix
        .triples
        .iter()
        .zip(&texts)
        .map(|(lp, text)| LangStream::parse(&lp.lang, text, &lp.path))
        .collect::<Result<Vec<_>>>()?;
    let outcome = build_schedule(streams, &config)?;
    let mut files = Vec::new();
    write_file(&cfg.output.join("combined.tsv"), combined, &mut files)?;
    let mut manifest = Vec::new();
    outcome.schedule.write_manifest(&mut manifest)?;
    manifest.flush()?;
    write_file(&cfg.output.join("schedule.jsonl"), manifest, &mut files)?;
    Ok(Outcome {
        value: outcome.schedule,
        files,
        warnings: outcome.warnings,
    })
}
