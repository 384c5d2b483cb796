//! Language-bias diagnostics: per-language Recall@MLIR-Relevant distributions
//! and per-topic KS tests of relevant-document scores against a reference
//! language.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::metrics::{recall_at_mlir_relevant, LangFilter};
use super::stats::{bonferroni_adjust, ks_two_sample, Summary};
use super::{MergedQrels, Run};
use crate::error::{Error, Result};

/// Relevant documents a language needs on a topic before it is KS-tested.
pub const KS_MIN_RELEVANT: usize = 3;
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsEntry {
    pub d: f64,
    pub p: f64,
    pub p_adjusted: f64,
    /// Retrieved relevant documents of the tested and the reference language.
    pub n_lang: usize,
    pub n_reference: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicLanguageEntry {
    pub topic: String,
    pub lang: String,
    pub relevant: usize,
    pub recall_at_mlir_relevant: Option<f64>,
    /// Whether the topic meets the KS threshold for this language and the reference.
    pub ks_eligible: bool,
    /// `None` when ineligible or when either side retrieved no relevant document.
    pub ks: Option<KsEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageBias {
    /// Distribution over topics with at least one relevant document.
    pub recall: Summary,
    pub ks_topics: usize,
    pub flagged: usize,
    pub flagged_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub tag: String,
    pub reference_lang: String,
    pub ks_method: String,
    pub correction: String,
    pub n_tests: usize,
    pub significance: f64,
    pub languages: BTreeMap<String, LanguageBias>,
    /// Judged topics absent from the run; their entries are undefined.
    pub missing_topics: Vec<String>,
    pub entries: Vec<TopicLanguageEntry>,
}

impl BiasReport {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("topic,lang,relevant,recall_at_mlir_relevant,ks_d,ks_p,ks_p_adjusted\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.topic,
                e.lang,
                e.relevant,
                opt(e.recall_at_mlir_relevant),
                opt(e.ks.as_ref().map(|k| k.d)),
                opt(e.ks.as_ref().map(|k| k.p)),
                opt(e.ks.as_ref().map(|k| k.p_adjusted)),
            );
        }
        out
    }
}

/// Builds the bias report for `run` with `reference_lang` as the KS baseline.
///
/// Every judged topic gets an entry; topics absent from the run are listed
/// in `missing_topics` and carry no values. The Bonferroni factor is
/// the total number of KS tests carried out in the report.
pub fn bias_report(run: &Run, qrels: &MergedQrels, reference_lang: &str) -> Result<BiasReport> {
    let languages = qrels.languages();
    if !languages.contains(reference_lang) {
        return Err(Error::Config(format!("reference language {reference_lang} absent from qrels")));
    }
    let mut entries = Vec::new();
    let mut raw = Vec::new();
    let mut missing_topics = Vec::new();
    for qid in qrels.query_ids() {
        let in_run = run.get(qid).is_some();
        if !in_run && qrels.relevant_count(qid) > 0 {
            missing_topics.push(qid.to_string());
        }
        let ranked = run.get(qid).unwrap_or_default();
        let reference_relevant = qrels.relevant(qid, Some(reference_lang)).count();
        let scores_of = |lang: &str| -> Vec<f64> {
            ranked
                .iter()
                .filter(|(d, _)| qrels.doc_lang(d) == Some(lang) && qrels.is_relevant(qid, d))
                .map(|(_, s)| *s)
                .collect()
        };
        let reference_scores = scores_of(reference_lang);
        for &lang in &languages {
            let relevant = qrels.relevant(qid, Some(lang)).count();
            if relevant == 0 {
                continue;
            }
            let eligible = in_run
                && lang != reference_lang
                && relevant >= KS_MIN_RELEVANT
                && reference_relevant >= KS_MIN_RELEVANT;
            let mut ks = None;
            if eligible {
                let sample = scores_of(lang);
                if !sample.is_empty() && !reference_scores.is_empty() {
                    let r = ks_two_sample(&sample, &reference_scores)?;
                    raw.push(r.p);
                    ks = Some(KsEntry {
                        d: r.d,
                        p: r.p,
                        p_adjusted: f64::NAN,
                        n_lang: sample.len(),
                        n_reference: reference_scores.len(),
                    });
                }
            }
            entries.push(TopicLanguageEntry {
                topic: qid.to_string(),
                lang: lang.to_string(),
                relevant,
                recall_at_mlir_relevant: in_run
                    .then(|| recall_at_mlir_relevant(ranked, qrels, qid, LangFilter::Lang(lang)))
                    .flatten(),
                ks_eligible: eligible,
                ks,
            });
        }
    }
    let n_tests = raw.len();
    if n_tests > 0 {
        let adjusted = bonferroni_adjust(&raw, n_tests)?;
        for (ks, adj) in entries.iter_mut().filter_map(|e| e.ks.as_mut()).zip(adjusted) {
            ks.p_adjusted = adj;
        }
    }
    let languages = languages
        .iter()
        .map(|&lang| {
            let mine: Vec<&TopicLanguageEntry> = entries.iter().filter(|e| e.lang == lang).collect();
            let recalls: Vec<(String, f64)> = mine
                .iter()
                .filter_map(|e| e.recall_at_mlir_relevant.map(|r| (e.topic.clone(), r)))
                .collect();
            let ks_topics = mine.iter().filter(|e| e.ks_eligible).count();
            let flagged = mine
                .iter()
                .filter(|e| e.ks.as_ref().is_some_and(|k| k.p_adjusted < SIGNIFICANCE))
                .count();
            let bias = LanguageBias {
                recall: Summary::new(&recalls),
                ks_topics,
                flagged,
                flagged_fraction: (ks_topics > 0).then(|| flagged as f64 / ks_topics as f64),
            };
            (lang.to_string(), bias)
        })
        .collect();
    Ok(BiasReport {
        tag: run.tag.clone(),
        reference_lang: reference_lang.to_string(),
        ks_method: "two-sample KS, asymptotic Kolmogorov p-value with effective size n_a*n_b/(n_a+n_b)".into(),
        correction: format!("bonferroni over {n_tests} tests"),
        n_tests,
        significance: SIGNIFICANCE,
        languages,
        missing_topics,
        entries,
    })
}
