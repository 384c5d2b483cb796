//! Evaluation over merged multilingual relevance judgments.

mod bias;
mod metrics;
mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub use bias::{bias_report, BiasReport, KsEntry, LanguageBias, TopicLanguageEntry};
pub use metrics::{
    average_precision, evaluate, precision_at, precision_at_10, r_precision, recall_at_mlir_relevant,
    Evaluation, LangFilter, QueryMetrics,
};
pub use stats::{
    bonferroni_adjust, kolmogorov_p, ks_two_sample, paired_t_test, quantile, KsResult, Summary, TTest,
};

use crate::error::{Error, Result};

/// A ranked list per query, best first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub tag: String,
    queries: BTreeMap<String, Vec<(String, f64)>>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            queries: BTreeMap::new(),
        }
    }

    /// Adds a ranked list; rejects duplicate documents and increasing scores.
    pub fn insert(&mut self, qid: impl Into<String>, ranked: Vec<(String, f64)>) -> Result<()> {
        let qid = qid.into();
        let mut seen = std::collections::BTreeSet::new();
        for (doc, _) in &ranked {
            if !seen.insert(doc.as_str()) {
                return Err(Error::Input(format!("query {qid}: document {doc} ranked twice")));
            }
        }
        if ranked.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::Input(format!("query {qid}: scores increase with rank")));
        }
        if self.queries.insert(qid.clone(), ranked).is_some() {
            return Err(Error::Input(format!("query {qid} already in run")));
        }
        Ok(())
    }

    pub fn get(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.queries.get(qid).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Multiplies every score by `factor`.
    pub fn scaled(&self, factor: f64) -> Run {
        Run {
            tag: self.tag.clone(),
            queries: self
                .queries
                .iter()
                .map(|(q, r)| (q.clone(), r.iter().map(|(d, s)| (d.clone(), s * factor)).collect()))
                .collect(),
        }
    }

    /// Parses the TREC 6-column format `qid Q0 docid rank score tag`.
    ///
    /// Each query's list is ordered by descending score; equal scores keep
    /// their order of appearance.
    pub fn parse_trec(source: &str, origin: &Path) -> Result<Self> {
        let mut tag = None;
        let mut lists: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (i, line) in source.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 6 {
                return Err(Error::parse(origin, i + 1, format!("expected 6 columns, found {}", fields.len())));
            }
            fields[3]
                .parse::<u64>()
                .map_err(|e| Error::parse(origin, i + 1, format!("rank: {e}")))?;
            let score: f64 = fields[4]
                .parse()
                .map_err(|e| Error::parse(origin, i + 1, format!("score: {e}")))?;
            if !score.is_finite() {
                return Err(Error::parse(origin, i + 1, "score is not finite"));
            }
            tag.get_or_insert_with(|| fields[5].to_string());
            lists
                .entry(fields[0].to_string())
                .or_default()
                .push((fields[2].to_string(), score));
        }
        let mut run = Run::new(tag.unwrap_or_default());
        for (qid, mut list) in lists {
            list.sort_by(|a, b| b.1.total_cmp(&a.1));
            run.insert(qid, list)?;
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_trec(&std::fs::read_to_string(path)?, path)
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (qid, list) in &self.queries {
            for (rank, (doc, score)) in list.iter().enumerate() {
                let _ = writeln!(out, "{qid} Q0 {doc} {} {score} {}", rank + 1, self.tag);
            }
        }
        out
    }
}

/// Judgments of one qrels file: query → document → grade.
pub type Qrels = BTreeMap<String, BTreeMap<String, u32>>;

/// Parses TREC 4-column qrels `qid 0 docid rel`.
pub fn parse_qrels(source: &str, origin: &Path) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in source.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::parse(origin, i + 1, format!("expected 4 columns, found {}", fields.len())));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|e| Error::parse(origin, i + 1, format!("relevance: {e}")))?;
        let grade = u32::try_from(grade).map_err(|_| Error::parse(origin, i + 1, "negative relevance grade"))?;
        let per_query = qrels.entry(fields[0].to_string()).or_default();
        if per_query.insert(fields[2].to_string(), grade).is_some() {
            return Err(Error::parse(origin, i + 1, format!("{} judged twice for {}", fields[2], fields[0])));
        }
    }
    Ok(qrels)
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&std::fs::read_to_string(path)?, path)
}

/// Judgments for all languages with the language of every judged document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergedQrels {
    judgments: Qrels,
    doc_lang: BTreeMap<String, String>,
}

impl MergedQrels {
    /// Judgments from a single file whose documents' languages come from `doc_lang`.
    pub fn with_doc_langs(judgments: Qrels, doc_lang: BTreeMap<String, String>) -> Result<Self> {
        for docs in judgments.values() {
            if let Some(doc) = docs.keys().find(|d| !doc_lang.contains_key(*d)) {
                return Err(Error::Input(format!("judged document {doc} has no language")));
            }
        }
        Ok(Self { judgments, doc_lang })
    }

    pub fn judgments(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn doc_lang(&self, doc: &str) -> Option<&str> {
        self.doc_lang.get(doc).map(String::as_str)
    }

    /// Languages of all judged documents.
    pub fn languages(&self) -> std::collections::BTreeSet<&str> {
        self.judgments
            .values()
            .flat_map(|docs| docs.keys())
            .filter_map(|d| self.doc_lang(d))
            .collect()
    }

    /// Relevant (grade > 0) documents of `qid`, optionally restricted to one language.
    pub fn relevant<'a>(&'a self, qid: &str, lang: Option<&'a str>) -> impl Iterator<Item = &'a str> + 'a {
        self.judgments
            .get(qid)
            .into_iter()
            .flat_map(|docs| docs.iter())
            .filter(|(_, &g)| g > 0)
            .map(|(d, _)| d.as_str())
            .filter(move |d| lang.is_none() || self.doc_lang(d) == lang)
    }

    pub fn relevant_count(&self, qid: &str) -> usize {
        self.relevant(qid, None).count()
    }

    pub fn is_relevant(&self, qid: &str, doc: &str) -> bool {
        self.judgments
            .get(qid)
            .and_then(|docs| docs.get(doc))
            .is_some_and(|&g| g > 0)
    }
}

/// Unions per-language qrels, attributing each judged document to its file's
/// language. `doc_lang` optionally supplies languages of unjudged documents
/// (e.g. from the corpus) so that runs can be filtered by language.
pub fn merge_qrels(per_language: &[(String, Qrels)], doc_lang: Option<&BTreeMap<String, String>>) -> Result<MergedQrels> {
    let mut merged = MergedQrels {
        judgments: Qrels::new(),
        doc_lang: doc_lang.cloned().unwrap_or_default(),
    };
    let mut judged_in: BTreeMap<&str, &str> = BTreeMap::new();
    for (lang, qrels) in per_language {
        for (qid, docs) in qrels {
            let target = merged.judgments.entry(qid.clone()).or_default();
            for (doc, &grade) in docs {
                match judged_in.get(doc.as_str()) {
                    Some(&other) if other != lang => {
                        return Err(Error::QrelsCollision {
                            doc_id: doc.clone(),
                            first: other.to_string(),
                            second: lang.clone(),
                        })
                    }
                    _ => {
                        judged_in.insert(doc, lang);
                    }
                }
                if let Some(known) = merged.doc_lang.get(doc) {
                    if known != lang {
                        return Err(Error::Input(format!(
                            "document {doc} is {known} in the language map but judged in the {lang} qrels"
                        )));
                    }
                }
                merged.doc_lang.insert(doc.clone(), lang.clone());
                if target.insert(doc.clone(), grade).is_some() {
                    return Err(Error::Input(format!("{doc} judged twice for {qid} in {lang}")));
                }
            }
        }
    }
    Ok(merged)
}
