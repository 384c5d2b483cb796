use std::collections::BTreeMap;

use serde::Serialize;

use super::{MergedQrels, Run};
use crate::error::{Error, Result};

/// Which documents a per-language measure looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LangFilter<'a> {
    All,
    Lang(&'a str),
}

/// Mean over relevant documents of the precision at each one's rank;
/// unretrieved relevant documents contribute 0. `None` without relevant docs.
pub fn average_precision(ranked: &[(String, f64)], qrels: &MergedQrels, qid: &str) -> Option<f64> {
    let relevant = qrels.relevant_count(qid);
    if relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, (doc, _)) in ranked.iter().enumerate() {
        if qrels.is_relevant(qid, doc) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant as f64)
}

/// Relevant documents in the top `k`, over `k` (short lists count as padded).
pub fn precision_at(ranked: &[(String, f64)], qrels: &MergedQrels, qid: &str, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked.iter().take(k).filter(|(d, _)| qrels.is_relevant(qid, d)).count();
    hits as f64 / k as f64
}

pub fn precision_at_10(ranked: &[(String, f64)], qrels: &MergedQrels, qid: &str) -> f64 {
    precision_at(ranked, qrels, qid, 10)
}

/// Recall within the top R_q, where R_q counts relevant documents across all
/// languages. For a single language both the ranking and the judgments are
/// restricted to that language while the cutoff stays R_q. `None` when the
/// language has no relevant document for the query.
pub fn recall_at_mlir_relevant(ranked: &[(String, f64)], qrels: &MergedQrels, qid: &str, lang: LangFilter<'_>) -> Option<f64> {
    let cutoff = qrels.relevant_count(qid);
    let lang = match lang {
        LangFilter::All => None,
        LangFilter::Lang(l) => Some(l),
    };
    let relevant = qrels.relevant(qid, lang).count();
    if relevant == 0 {
        return None;
    }
    let found = ranked
        .iter()
        .filter(|(d, _)| lang.is_none() || qrels.doc_lang(d) == lang)
        .take(cutoff)
        .filter(|(d, _)| qrels.is_relevant(qid, d))
        .count();
    Some(found as f64 / relevant as f64)
}

/// Precision at rank R_q over the full multilingual ranking.
pub fn r_precision(ranked: &[(String, f64)], qrels: &MergedQrels, qid: &str) -> Option<f64> {
    let r = qrels.relevant_count(qid);
    (r > 0).then(|| precision_at(ranked, qrels, qid, r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryMetrics {
    pub ap: f64,
    pub p10: f64,
    pub r_precision: f64,
    pub relevant: usize,
    /// Recall@MLIR-Relevant per language; `None` where undefined.
    pub recall_mlir: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub tag: String,
    pub queries: usize,
    pub map: f64,
    pub p10: f64,
    pub r_precision: f64,
    /// Mean Recall@MLIR-Relevant per language over queries where it is defined.
    pub recall_mlir: BTreeMap<String, Option<f64>>,
    /// Judged queries with relevant documents that the run does not contain.
    pub missing_queries: Vec<String>,
    pub per_query: BTreeMap<String, QueryMetrics>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-query and mean metrics over queries that are in the run and have at
/// least one relevant document.
pub fn evaluate(run: &Run, qrels: &MergedQrels) -> Result<Evaluation> {
    let languages: Vec<String> = qrels.languages().into_iter().map(String::from).collect();
    let mut per_query = BTreeMap::new();
    let mut missing = Vec::new();
    for qid in qrels.query_ids() {
        if qrels.relevant_count(qid) == 0 {
            continue;
        }
        let Some(ranked) = run.get(qid) else {
            missing.push(qid.to_string());
            continue;
        };
        let recall_mlir = languages
            .iter()
            .map(|l| (l.clone(), recall_at_mlir_relevant(ranked, qrels, qid, LangFilter::Lang(l))))
            .collect();
        per_query.insert(
            qid.to_string(),
            QueryMetrics {
                ap: average_precision(ranked, qrels, qid).expect("has relevant"),
                p10: precision_at_10(ranked, qrels, qid),
                r_precision: r_precision(ranked, qrels, qid).expect("has relevant"),
                relevant: qrels.relevant_count(qid),
                recall_mlir,
            },
        );
    }
    if per_query.is_empty() {
        return Err(Error::Input("run and qrels share no query with relevant documents".into()));
    }
    let recall_mlir = languages
        .iter()
        .map(|l| {
            let m = mean(per_query.values().filter_map(|q: &QueryMetrics| q.recall_mlir[l]));
            (l.clone(), m)
        })
        .collect();
    Ok(Evaluation {
        tag: run.tag.clone(),
        queries: per_query.len(),
        map: mean(per_query.values().map(|q| q.ap)).unwrap_or(0.0),
        p10: mean(per_query.values().map(|q| q.p10)).unwrap_or(0.0),
        r_precision: mean(per_query.values().map(|q| q.r_precision)).unwrap_or(0.0),
        recall_mlir,
        missing_queries: missing,
        per_query,
    })
}
