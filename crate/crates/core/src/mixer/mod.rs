//! Training-triple streams for English-only training (ET) and multilingual
//! translate-train with mixed-language (MTT-M) or single-language (MTT-S)
//! batches.

mod combined;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use combined::{emit_combined, split_combined};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub query: String,
    pub positive: String,
    pub negative: String,
    pub lang: String,
}

/// A triple together with its 1-based line number in the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcedTriple {
    pub line: usize,
    pub triple: Triple,
}

/// All triples of one language, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangStream {
    pub lang: String,
    pub triples: Vec<SourcedTriple>,
}

impl LangStream {
    /// Parses a 3-column TSV (query, positive, negative).
    pub fn parse(lang: &str, source: &str, origin: &Path) -> Result<Self> {
        let mut triples = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(origin, i + 1, format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::parse(origin, i + 1, "empty field in triple"));
            }
            triples.push(SourcedTriple {
                line: i + 1,
                triple: Triple {
                    query: fields[0].to_string(),
                    positive: fields[1].to_string(),
                    negative: fields[2].to_string(),
                    lang: lang.to_string(),
                },
            });
        }
        Ok(Self { lang: lang.to_string(), triples })
    }

    pub fn load(lang: &str, path: &Path) -> Result<Self> {
        Self::parse(lang, &std::fs::read_to_string(path)?, path)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixMode {
    #[serde(rename = "et")]
    Et,
    #[serde(rename = "mtt-m")]
    MttM,
    #[serde(rename = "mtt-s")]
    MttS,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixConfig {
    pub mode: MixMode,
    /// Target languages in rotation order.
    pub languages: Vec<String>,
    pub batch_size: usize,
    pub seed: u64,
    /// Shuffle instances (identically across aligned streams) before mixing.
    #[serde(default)]
    pub shuffle: bool,
    /// Number of data-parallel replicas each batch is dealt across.
    #[serde(default = "one")]
    pub replicas: usize,
}

fn one() -> usize {
    1
}

impl MixConfig {
    pub fn new(mode: MixMode, languages: &[&str], batch_size: usize) -> Self {
        Self {
            mode,
            languages: languages.iter().map(|s| s.to_string()).collect(),
            batch_size,
            seed: 0,
            shuffle: false,
            replicas: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.languages.len()) {
            (_, 0) => return Err(Error::Config("no languages configured".into())),
            (MixMode::Et, n) if n != 1 => {
                return Err(Error::Config(format!("ET uses exactly one language, got {n}")))
            }
            (MixMode::MttM | MixMode::MttS, 1) => {
                return Err(Error::Config("MTT modes need at least two languages".into()))
            }
            _ => {}
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.languages.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Config(format!("language {dup} listed twice")));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.replicas == 0 || self.replicas > self.batch_size {
            return Err(Error::Config(format!(
                "replicas must lie in 1..={}, got {}",
                self.batch_size, self.replicas
            )));
        }
        Ok(())
    }
}

/// Output of [`mix_round_robin`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRobin {
    pub triples: Vec<SourcedTriple>,
    /// Set when the streams had unequal lengths and were cut to the shortest.
    pub truncated_to: Option<usize>,
}

/// Interleaves aligned per-language streams: t1 of every language in order,
/// then t2, and so on, up to the shortest stream.
pub fn mix_round_robin(streams: &[LangStream]) -> Result<RoundRobin> {
    if streams.is_empty() {
        return Err(Error::Config("round-robin mixing needs at least one stream".into()));
    }
    let shortest = streams.iter().map(LangStream::len).min().unwrap_or(0);
    let longest = streams.iter().map(LangStream::len).max().unwrap_or(0);
    let truncated_to = (shortest != longest).then_some(shortest);
    if truncated_to.is_some() {
        log::warn!("triple streams differ in length ({shortest}..{longest}); truncating to {shortest}");
    }
    let mut triples = Vec::with_capacity(shortest * streams.len());
    for i in 0..shortest {
        let query = &streams[0].triples[i].triple.query;
        for s in streams {
            let t = &s.triples[i];
            if &t.triple.query != query {
                return Err(Error::Alignment(format!(
                    "instance {i}: {} line {} has query {:?}, {} has {:?}",
                    s.lang, t.line, t.triple.query, streams[0].lang, query
                )));
            }
            triples.push(t.clone());
        }
    }
    Ok(RoundRobin { triples, truncated_to })
}

/// Applies one seeded permutation to every stream. Streams of equal length
/// receive the same permutation, so alignment is preserved.
pub fn shuffle_aligned(streams: &mut [LangStream], seed: u64) {
    for s in streams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        s.triples.shuffle(&mut rng);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledTriple {
    pub batch: usize,
    pub position: usize,
    pub triple: SourcedTriple,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub batch: usize,
    pub position: usize,
    pub lang: String,
    pub triple_line: usize,
}

/// Ordered triples with batch ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixSchedule {
    pub entries: Vec<ScheduledTriple>,
    pub batch_size: usize,
    /// Ordinals of batches with fewer than `batch_size` triples.
    pub partial_batches: Vec<usize>,
}

impl MixSchedule {
    fn from_batches(batches: Vec<Vec<SourcedTriple>>, batch_size: usize) -> Self {
        let mut entries = Vec::new();
        let mut partial_batches = Vec::new();
        for (b, batch) in batches.into_iter().enumerate() {
            if batch.len() < batch_size {
                partial_batches.push(b);
            }
            entries.extend(batch.into_iter().enumerate().map(|(position, triple)| ScheduledTriple {
                batch: b,
                position,
                triple,
            }));
        }
        Self { entries, batch_size, partial_batches }
    }

    pub fn batch_count(&self) -> usize {
        self.entries.last().map_or(0, |e| e.batch + 1)
    }

    /// Batches in order, as contiguous slices.
    pub fn batches(&self) -> impl Iterator<Item = &[ScheduledTriple]> {
        self.entries.chunk_by(|a, b| a.batch == b.batch)
    }

    /// Deals the batch's triples across `replicas` round-robin by position.
    pub fn replica_shards(batch: &[ScheduledTriple], replicas: usize) -> Vec<Vec<&ScheduledTriple>> {
        let replicas = replicas.max(1);
        let mut shards = vec![Vec::new(); replicas];
        for t in batch {
            shards[t.position % replicas].push(t);
        }
        shards
    }

    pub fn manifest(&self) -> impl Iterator<Item = ManifestEntry> + '_ {
        self.entries.iter().map(|e| ManifestEntry {
            batch: e.batch,
            position: e.position,
            lang: e.triple.triple.lang.clone(),
            triple_line: e.triple.line,
        })
    }

    pub fn write_manifest(&self, mut w: impl Write) -> Result<()> {
        for entry in self.manifest() {
            serde_json::to_writer(&mut w, &entry)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-batch language histogram.
    pub fn language_histograms(&self) -> Vec<BTreeMap<&str, usize>> {
        self.batches()
            .map(|b| {
                let mut h = BTreeMap::new();
                for t in b {
                    *h.entry(t.triple.triple.lang.as_str()).or_default() += 1;
                }
                h
            })
            .collect()
    }
}

/// Cuts a triple stream into batches according to `config.mode`.
///
/// ET and MTT-M chunk the stream in order (MTT-M expects the round-robin
/// stream). MTT-S separates the stream by language and rotates languages
/// between batches in configured order, skipping exhausted languages.
pub fn schedule_batches(stream: &[SourcedTriple], config: &MixConfig) -> Result<MixSchedule> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyInput("cannot schedule an empty triple stream".into()));
    }
    if let Some(t) = stream.iter().find(|t| !config.languages.contains(&t.triple.lang)) {
        return Err(Error::Config(format!(
            "triple at line {} has language {} outside the configured set",
            t.line, t.triple.lang
        )));
    }
    let chunk = |s: &[SourcedTriple]| s.chunks(config.batch_size).map(<[_]>::to_vec).collect::<Vec<_>>();
    let batches = match config.mode {
        MixMode::Et | MixMode::MttM => chunk(stream),
        MixMode::MttS => {
            let per_lang: Vec<Vec<Vec<SourcedTriple>>> = config
                .languages
                .iter()
                .map(|l| {
                    let own: Vec<SourcedTriple> =
                        stream.iter().filter(|t| &t.triple.lang == l).cloned().collect();
                    chunk(&own)
                })
                .collect();
            let rounds = per_lang.iter().map(Vec::len).max().unwrap_or(0);
            let mut queues: Vec<_> = per_lang.into_iter().map(Vec::into_iter).collect();
            let mut out = Vec::new();
            for _ in 0..rounds {
                out.extend(queues.iter_mut().filter_map(Iterator::next));
            }
            out
        }
    };
    let schedule = MixSchedule::from_batches(batches, config.batch_size);
    if config.mode == MixMode::MttS && !schedule.partial_batches.is_empty() {
        log::warn!("{} partial single-language batches", schedule.partial_batches.len());
    }
    Ok(schedule)
}

/// Result of [`build_schedule`], with any warnings raised on the way.
#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub schedule: MixSchedule,
    pub warnings: Vec<String>,
}

/// End-to-end: optional shuffle, mixing according to the mode, batching.
pub fn build_schedule(mut streams: Vec<LangStream>, config: &MixConfig) -> Result<ScheduleOutcome> {
    config.validate()?;
    let langs: Vec<&str> = streams.iter().map(|s| s.lang.as_str()).collect();
    if langs != config.languages.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Config(format!(
            "streams {langs:?} do not match configured languages {:?}",
            config.languages
        )));
    }
    if config.shuffle {
        shuffle_aligned(&mut streams, config.seed);
    }
    let mut warnings = Vec::new();
    let stream = match config.mode {
        MixMode::Et => streams.remove(0).triples,
        MixMode::MttM => {
            let rr = mix_round_robin(&streams)?;
            if let Some(n) = rr.truncated_to {
                warnings.push(format!("streams truncated to the shortest length {n}"));
            }
            rr.triples
        }
        MixMode::MttS => streams.into_iter().flat_map(|s| s.triples).collect(),
    };
    let schedule = schedule_batches(&stream, config)?;
    if !schedule.partial_batches.is_empty() {
        warnings.push(format!(
            "{} partial batches: {:?}",
            schedule.partial_batches.len(),
            schedule.partial_batches
        ));
    }
    Ok(ScheduleOutcome { schedule, warnings })
}
