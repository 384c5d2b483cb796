//! Inverted index and BM25 ranking.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{analyze, AnalyzerConfig, Document, Query};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::Config(format!("k1 must be finite and >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; strictly positive for `0 <= df <= N`.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let (n, df) = (doc_count as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub doc_count: usize,
    pub avg_doc_len: f64,
    pub doc_lens: BTreeMap<String, usize>,
    pub df: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Ordinal into the index's doc-id-sorted document table.
    pub doc: u32,
    pub tf: u32,
}

/// Immutable BM25 index over analyzed documents.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lens: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    stats: CollectionStats,
    params: Bm25Params,
    analyzer: AnalyzerConfig,
}

/// On-disk form; statistics are recomputed on load.
#[derive(Serialize, Deserialize)]
struct IndexFile {
    params: Bm25Params,
    analyzer: AnalyzerConfig,
    doc_ids: Vec<String>,
    doc_lens: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

/// Analyzes and indexes `docs`. Documents with empty text are indexed with length 0.
pub fn build_index(docs: &[Document], config: &AnalyzerConfig, params: Bm25Params) -> Result<InvertedIndex> {
    use rayon::prelude::*;

    // Analysis is the expensive part; index_tokens merges in doc-id order.
    let analyzed: Vec<(String, Vec<String>)> = docs
        .par_iter()
        .map(|d| (d.id.clone(), analyze(&d.text, &d.lang, config)))
        .collect();
    index_tokens(analyzed, config, params)
}

/// Indexes documents that were already analyzed with `config`.
pub fn index_tokens(mut docs: Vec<(String, Vec<String>)>, config: &AnalyzerConfig, params: Bm25Params) -> Result<InvertedIndex> {
    params.validate()?;
    docs.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(pair) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDoc(pair[0].0.clone()));
    }

    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lens = Vec::with_capacity(docs.len());
    for (ordinal, (_, tokens)) in docs.iter().enumerate() {
        doc_lens.push(tokens.len() as u32);
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_str()).or_default() += 1;
        }
        for (term, tf) in tf {
            postings.entry(term.to_string()).or_default().push(Posting {
                doc: ordinal as u32,
                tf,
            });
        }
    }
    let doc_ids = docs.into_iter().map(|(id, _)| id).collect();
    Ok(InvertedIndex::from_parts(doc_ids, doc_lens, postings, params, config.clone()))
}

impl InvertedIndex {
    fn from_parts(
        doc_ids: Vec<String>,
        doc_lens: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
        params: Bm25Params,
        analyzer: AnalyzerConfig,
    ) -> Self {
        let doc_count = doc_ids.len();
        let total: u64 = doc_lens.iter().map(|&l| l as u64).sum();
        let stats = CollectionStats {
            doc_count,
            avg_doc_len: if doc_count == 0 { 0.0 } else { total as f64 / doc_count as f64 },
            doc_lens: doc_ids
                .iter()
                .cloned()
                .zip(doc_lens.iter().map(|&l| l as usize))
                .collect(),
            df: postings.iter().map(|(t, p)| (t.clone(), p.len())).collect(),
        };
        Self {
            doc_ids,
            doc_lens,
            postings,
            stats,
            params,
            analyzer,
        }
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Posting list of `term` as `(doc id, tf)`, sorted by doc id.
    pub fn postings(&self, term: &str) -> impl Iterator<Item = (&str, u32)> {
        self.postings
            .get(term)
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .map(|p| (self.doc_ids[p.doc as usize].as_str(), p.tf))
    }

    fn ordinal(&self, doc_id: &str) -> Result<usize> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .map_err(|_| Error::UnknownDoc(doc_id.to_string()))
    }

    fn tf(&self, term: &str, ordinal: usize) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by_key(&(ordinal as u32), |p| p.doc)
                    .ok()
                    .map(|i| list[i].tf)
            })
            .unwrap_or(0)
    }

    fn term_weight(&self, tf: u32, doc_len: f64, avg_doc_len: f64, idf: f64) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avg_doc_len))
    }

    /// BM25 score of one document; repeated query terms count once per occurrence.
    pub fn bm25_score(&self, query_terms: &[String], doc_id: &str) -> Result<f64> {
        self.bm25_score_with_stats(query_terms, doc_id, &self.stats)
    }

    /// Scores a document using this index's term frequencies but the
    /// collection statistics (N, df, lengths) of `stats`.
    pub fn bm25_score_with_stats(&self, query_terms: &[String], doc_id: &str, stats: &CollectionStats) -> Result<f64> {
        let ordinal = self.ordinal(doc_id)?;
        let doc_len = *stats
            .doc_lens
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))? as f64;
        let mut score = 0.0;
        for term in query_terms {
            let tf = self.tf(term, ordinal);
            if tf == 0 {
                continue;
            }
            let df = stats.df.get(term).copied().unwrap_or(0);
            score += self.term_weight(tf, doc_len, stats.avg_doc_len, idf(stats.doc_count, df));
        }
        Ok(score)
    }

    /// Top-`k` documents containing at least one query term, by descending
    /// score with ties broken by ascending doc id.
    pub fn search_terms(&self, query_terms: &[String], k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let mut scores = vec![0.0f64; self.doc_ids.len()];
        let mut hit = vec![false; self.doc_ids.len()];
        for term in query_terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = idf(self.stats.doc_count, list.len());
            for p in list {
                let d = p.doc as usize;
                scores[d] += self.term_weight(p.tf, self.doc_lens[d] as f64, self.stats.avg_doc_len, idf);
                hit[d] = true;
            }
        }
        let mut ranked: Vec<usize> = (0..scores.len()).filter(|&d| hit[d]).collect();
        // Ordinals follow doc id order, so the secondary key is the tie-break.
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ranked.truncate(k);
        Ok(ranked
            .into_iter()
            .map(|d| (self.doc_ids[d].clone(), scores[d]))
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = IndexFile {
            params: self.params,
            analyzer: self.analyzer.clone(),
            doc_ids: self.doc_ids.clone(),
            doc_lens: self.doc_lens.clone(),
            postings: self
                .postings
                .iter()
                .map(|(t, p)| (t.clone(), p.iter().map(|p| (p.doc, p.tf)).collect()))
                .collect(),
        };
        let w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r = std::io::BufReader::new(std::fs::File::open(path)?);
        let file: IndexFile = serde_json::from_reader(r)?;
        file.params.validate()?;
        if file.doc_ids.len() != file.doc_lens.len() {
            return Err(Error::Input("index file: doc table and length table differ".into()));
        }
        if file.doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("index file: doc ids not strictly sorted".into()));
        }
        let n = file.doc_ids.len() as u32;
        let mut postings = BTreeMap::new();
        for (term, list) in file.postings {
            if list.windows(2).any(|w| w[0].0 >= w[1].0) || list.iter().any(|&(d, tf)| d >= n || tf == 0) {
                return Err(Error::Input(format!("index file: malformed posting list for {term:?}")));
            }
            postings.insert(term, list.into_iter().map(|(doc, tf)| Posting { doc, tf }).collect());
        }
        Ok(Self::from_parts(file.doc_ids, file.doc_lens, postings, file.params, file.analyzer))
    }
}

/// Analyzes `query` (title and description) and returns the top-`k` documents.
pub fn sparse_search(query: &Query, index: &InvertedIndex, k: usize, config: &AnalyzerConfig) -> Result<Vec<(String, f64)>> {
    let terms = analyze(&query.full_text(), &query.lang, config);
    if terms.is_empty() {
        return Err(Error::EmptyQuery { id: query.id.clone() });
    }
    index.search_terms(&terms, k)
}
