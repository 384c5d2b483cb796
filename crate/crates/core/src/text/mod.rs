//! Text analysis, passage windows, and query stop-structure removal.

mod analyzer;
mod passage;
pub mod porter;
mod stop;

use std::io::BufRead;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use analyzer::{analyze, analyze_spans, AnalyzerConfig, Token};
pub use passage::{split_passages, window_spans, Passage, DEFAULT_STRIDE, DEFAULT_WINDOW};
pub use stop::{strip_stop_structure, StopStructure, DEFAULT_STOP_STRUCTURE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, lang: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            lang: lang.into(),
            title: None,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub lang: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Query {
    pub fn new(id: impl Into<String>, lang: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            lang: lang.into(),
            title: title.into(),
            description: None,
        }
    }

    /// Title followed by the description, when present.
    pub fn full_text(&self) -> String {
        match &self.description {
            Some(d) if !self.title.is_empty() => format!("{} {}", self.title, d),
            Some(d) => d.clone(),
            None => self.title.clone(),
        }
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, validate: impl Fn(&T) -> Result<(), String>) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?;
        validate(&record).map_err(|m| Error::parse(path, i + 1, m))?;
        out.push(record);
    }
    Ok(out)
}

/// Reads a JSON-lines corpus (`id`, `lang`, optional `title`, `text`).
pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    read_jsonl(path, |d: &Document| {
        if d.id.is_empty() {
            Err("document id is empty".into())
        } else if d.lang.is_empty() {
            Err(format!("document {} has no language", d.id))
        } else {
            Ok(())
        }
    })
}

/// Reads a JSON-lines topic file (`id`, `lang`, `title`, optional `description`).
pub fn read_topics(path: &Path) -> Result<Vec<Query>> {
    read_jsonl(path, |q: &Query| {
        if q.id.is_empty() {
            Err("topic id is empty".into())
        } else {
            Ok(())
        }
    })
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_round_trip_and_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let docs = vec![
            Document::new("d1", "en", "hello"),
            Document {
                title: Some("Titel".into()),
                ..Document::new("d2", "de", "")
            },
        ];
        write_jsonl(&path, &docs).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), docs);

        std::fs::write(&path, "{\"id\":\"a\",\"lang\":\"en\",\"text\":\"x\"}\n\n{broken\n").unwrap();
        match read_corpus(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn full_text_joins_fields() {
        let mut q = Query::new("q", "en", "euro");
        assert_eq!(q.full_text(), "euro");
        q.description = Some("single currency".into());
        assert_eq!(q.full_text(), "euro single currency");
        q.title.clear();
        assert_eq!(q.full_text(), "single currency");
    }
}
