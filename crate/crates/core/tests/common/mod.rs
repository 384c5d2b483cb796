//! Synthetic multilingual collections shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mlir_kit::text::{write_jsonl, Document, Query};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Collection {
    pub docs: Vec<Document>,
    pub topics: Vec<Query>,
    /// Qrels file contents per language.
    pub qrels: BTreeMap<String, String>,
}

pub struct CollectionFiles {
    pub corpus: PathBuf,
    pub topics: PathBuf,
    pub qrels: Vec<(String, PathBuf)>,
}

/// Documents in `langs` round robin. A third of them are about one topic and
/// carry two or three of its shared topic words; the rest is language-specific
/// filler. Topic titles carry stop structure ("Find documents on ...").
pub fn collection(n_docs: usize, langs: &[&str], n_topics: usize, seed: u64) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    let mut judged: BTreeMap<String, BTreeMap<usize, Vec<(String, u32)>>> = BTreeMap::new();
    for i in 0..n_docs {
        let lang = langs[i % langs.len()];
        let len = rng.random_range(15..40);
        let mut words: Vec<String> = (0..len)
            .map(|_| format!("{lang}w{}", rng.random_range(0..300u32)))
            .collect();
        let topic = (i / langs.len()) % n_topics;
        let about = rng.random_bool(1.0 / 3.0);
        if about {
            for w in 0..rng.random_range(2..=3) {
                let at = rng.random_range(0..words.len());
                words.insert(at, format!("topic{topic}k{w}"));
            }
        }
        let id = format!("{lang}-{i:05}");
        let grade = u32::from(about);
        // Every doc sharing the topic slot is judged; the unrelated ones as 0.
        judged
            .entry(lang.to_string())
            .or_default()
            .entry(topic)
            .or_default()
            .push((id.clone(), grade));
        docs.push(Document::new(id, lang, words.join(" ")));
    }
    let topics = (0..n_topics)
        .map(|t| {
            let mut q = Query::new(format!("q{t:03}"), "en", format!("Find documents on topic{t}k0 topic{t}k1"));
            q.description = Some(format!("Relevant documents mention topic{t}k2."));
            q
        })
        .collect();
    let qrels = langs
        .iter()
        .map(|&lang| {
            let mut text = String::new();
            for (t, docs) in judged.get(lang).into_iter().flatten() {
                for (doc, grade) in docs {
                    let _ = writeln!(text, "q{t:03} 0 {doc} {grade}");
                }
            }
            (lang.to_string(), text)
        })
        .collect();
    Collection { docs, topics, qrels }
}

pub fn write_collection(dir: &Path, c: &Collection) -> CollectionFiles {
    std::fs::create_dir_all(dir).unwrap();
    let corpus = dir.join("corpus.jsonl");
    let topics = dir.join("topics.jsonl");
    write_jsonl(&corpus, &c.docs).unwrap();
    write_jsonl(&topics, &c.topics).unwrap();
    let qrels = c
        .qrels
        .iter()
        .map(|(lang, text)| {
            let p = dir.join(format!("qrels.{lang}"));
            std::fs::write(&p, text).unwrap();
            (lang.clone(), p)
        })
        .collect();
    CollectionFiles { corpus, topics, qrels }
}

/// Aligned triple files: line i of every language shares query `query{i}`.
pub fn triple_files(dir: &Path, langs: &[&str], lines: usize) -> Vec<(String, PathBuf)> {
    std::fs::create_dir_all(dir).unwrap();
    langs
        .iter()
        .map(|&lang| {
            let text: String = (0..lines)
                .map(|i| format!("query {i}\t{lang} positive {i}\t{lang} negative {i}\n"))
                .collect();
            let path = dir.join(format!("triples.{lang}.tsv"));
            std::fs::write(&path, text).unwrap();
            (lang.to_string(), path)
        })
        .collect()
}

/// Random unit rows.
pub fn unit_rows(rng: &mut impl Rng, rows: usize, dim: usize) -> Vec<Vec<f32>> {
    (0..rows)
        .map(|_| {
            let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(1e-6);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}
