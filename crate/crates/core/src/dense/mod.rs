//! Late-interaction (MaxSim) and single-vector scoring with MaxP aggregation.

mod store;
mod toy;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use store::{EmbeddingFile, EmbeddingStore, PassageRef, StoreMode};
pub use toy::{toy_embed, toy_single_vector, ToyEmbedder};

use crate::error::{Error, Result};

/// Tolerance on the unit-norm invariant of stored rows.
pub const NORM_TOLERANCE: f32 = 1e-4;

fn check_unit(row: &[f32], what: &str) -> Result<()> {
    let norm = row.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE as f64 {
        return Err(Error::Input(format!("{what}: row norm {norm} is not unit length")));
    }
    Ok(())
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Scales `v` to unit L2 norm. Returns `None` for the zero vector.
pub fn normalize(v: &mut [f32]) -> Option<()> {
    let norm = v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x = (*x as f64 / norm) as f32);
    Some(())
}

/// Per-token embeddings of a query or passage; rows are unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    id: String,
    dim: usize,
    data: Vec<f32>,
}

impl TokenMatrix {
    /// Builds a matrix from row-major `data`, validating shape and row norms.
    pub fn new(id: impl Into<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        let id = id.into();
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Input(format!(
                "matrix {id}: {} values do not form >= 1 row of dimension {dim}",
                data.len()
            )));
        }
        for row in data.chunks_exact(dim) {
            check_unit(row, &id)?;
        }
        Ok(Self { id, dim, data })
    }

    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape { expected: dim, found: bad.len() });
        }
        Self::new(id, dim, rows.concat())
    }

    /// Like [`TokenMatrix::from_rows`] but normalizes each row first.
    pub fn normalized(id: impl Into<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let id = id.into();
        let mut rows = rows.to_vec();
        for r in &mut rows {
            normalize(r).ok_or_else(|| Error::Input(format!("matrix {id}: zero row")))?;
        }
        Self::from_rows(id, &rows)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// One dense vector standing for a whole query or passage.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleVector {
    id: String,
    vector: Vec<f32>,
}

impl SingleVector {
    pub fn new(id: impl Into<String>, vector: Vec<f32>) -> Result<Self> {
        let id = id.into();
        if vector.is_empty() {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        check_unit(&vector, &id)?;
        Ok(Self { id, vector })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.vector
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    MaxSim,
    SingleVector,
}

/// Sum over query rows of the best dot product with any passage row.
pub fn maxsim_score(query: &TokenMatrix, passage: &TokenMatrix) -> Result<f64> {
    if query.dim != passage.dim {
        return Err(Error::Shape { expected: query.dim, found: passage.dim });
    }
    Ok(query
        .rows()
        .map(|q| passage.rows().map(|p| dot(q, p)).fold(f64::NEG_INFINITY, f64::max))
        .sum())
}

pub fn single_vector_score(query: &SingleVector, passage: &SingleVector) -> Result<f64> {
    if query.dim() != passage.dim() {
        return Err(Error::Shape { expected: query.dim(), found: passage.dim() });
    }
    Ok(dot(&query.vector, &passage.vector))
}

/// MaxP: a document scores as its best passage.
pub fn maxp_aggregate(passage_scores: &[(usize, f64)]) -> Result<f64> {
    passage_scores
        .iter()
        .map(|&(_, s)| s)
        .reduce(f64::max)
        .ok_or(Error::EmptyAggregation)
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryEmbedding {
    Matrix(TokenMatrix),
    Vector(SingleVector),
}

impl QueryEmbedding {
    pub fn dim(&self) -> usize {
        match self {
            QueryEmbedding::Matrix(m) => m.dim(),
            QueryEmbedding::Vector(v) => v.dim(),
        }
    }
}

/// Scores every passage in `store`, aggregates per document with MaxP and
/// returns the top-`k` documents (descending score, ties by ascending doc id).
pub fn dense_search(
    query: &QueryEmbedding,
    store: &EmbeddingStore,
    kind: ScorerKind,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    use rayon::prelude::*;

    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if kind != store.mode().scorer() {
        return Err(Error::Config(format!(
            "scorer {kind:?} does not match a store in {:?} mode",
            store.mode()
        )));
    }
    if query.dim() != store.dim() {
        return Err(Error::Shape { expected: store.dim(), found: query.dim() });
    }

    let scores: Vec<f64> = (0..store.len())
        .into_par_iter()
        .map(|i| {
            let passage = store.matrix(i);
            match query {
                QueryEmbedding::Matrix(q) => maxsim_score(q, passage),
                QueryEmbedding::Vector(q) => {
                    passage.rows().next().map_or(Ok(f64::NEG_INFINITY), |row| Ok(dot(q.as_slice(), row)))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut per_doc: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, score) in scores.into_iter().enumerate() {
        let r = store.passage_ref(i);
        per_doc.entry(r.doc_id.as_str()).or_default().push((r.passage_index, score));
    }
    let mut ranked = per_doc
        .into_iter()
        .map(|(doc, ps)| Ok((doc.to_string(), maxp_aggregate(&ps)?)))
        .collect::<Result<Vec<_>>>()?;
    // BTreeMap iteration already gives ascending doc ids; the sort is stable.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.truncate(k);
    Ok(ranked)
}
