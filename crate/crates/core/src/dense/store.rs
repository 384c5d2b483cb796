//! Binary embedding files and the passage-indexed embedding store.
//!
//! Layout (little-endian): magic `MLKE`, version `u32`, mode `u8`
//! (0 = token matrices, 1 = single vectors), dim `u32`, entry count `u64`,
//! then per entry: id length `u16`, id bytes, row count `u32`, and
//! `row_count * dim` `f32` values in row-major order.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScorerKind, SingleVector, TokenMatrix};
use crate::error::{Error, Result};
use crate::text::Passage;

const MAGIC: &[u8; 4] = b"MLKE";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoreMode {
    TokenMatrices,
    SingleVectors,
}

impl StoreMode {
    pub fn scorer(self) -> ScorerKind {
        match self {
            StoreMode::TokenMatrices => ScorerKind::MaxSim,
            StoreMode::SingleVectors => ScorerKind::SingleVector,
        }
    }

    fn code(self) -> u8 {
        match self {
            StoreMode::TokenMatrices => 0,
            StoreMode::SingleVectors => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(StoreMode::TokenMatrices),
            1 => Ok(StoreMode::SingleVectors),
            other => Err(Error::Format(format!("unknown mode byte {other}"))),
        }
    }
}

/// A set of id-keyed embeddings in one mode and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub mode: StoreMode,
    pub dim: usize,
    pub entries: Vec<TokenMatrix>,
}

impl EmbeddingFile {
    pub fn new(mode: StoreMode, dim: usize, entries: Vec<TokenMatrix>) -> Result<Self> {
        for e in &entries {
            if e.dim() != dim {
                return Err(Error::Shape { expected: dim, found: e.dim() });
            }
            if mode == StoreMode::SingleVectors && e.n_rows() != 1 {
                return Err(Error::Input(format!(
                    "entry {} has {} rows in single-vector mode",
                    e.id(),
                    e.n_rows()
                )));
            }
        }
        Ok(Self { mode, dim, entries })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.mode.code()])?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for e in &self.entries {
            let id = e.id().as_bytes();
            let len = u16::try_from(id.len())
                .map_err(|_| Error::Format(format!("id longer than 65535 bytes: {}", e.id())))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(id)?;
            w.write_all(&(e.n_rows() as u32).to_le_bytes())?;
            for v in e.as_slice() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, not an MLKE file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut mode = [0u8; 1];
        r.read_exact(&mut mode).map_err(truncated)?;
        let mode = StoreMode::from_code(mode[0])?;
        let dim = read_u32(&mut r)? as usize;
        if dim == 0 {
            return Err(Error::Format("dimension is zero".into()));
        }
        let count = read_u64(&mut r)?;
        let mut entries = Vec::new();
        for _ in 0..count {
            let mut len = [0u8; 2];
            r.read_exact(&mut len).map_err(truncated)?;
            let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
            r.read_exact(&mut id).map_err(truncated)?;
            let id = String::from_utf8(id).map_err(|_| Error::Format("id is not UTF-8".into()))?;
            let rows = read_u32(&mut r)? as usize;
            if mode == StoreMode::SingleVectors && rows != 1 {
                return Err(Error::Format(format!("entry {id}: {rows} rows in single-vector mode")));
            }
            let mut bytes = vec![0u8; rows * dim * 4];
            r.read_exact(&mut bytes).map_err(truncated)?;
            let data = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            entries.push(TokenMatrix::new(id, dim, data)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after last entry".into()));
        }
        Ok(Self { mode, dim, entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(std::fs::File::open(path)?))
    }

    pub fn get(&self, id: &str) -> Option<&TokenMatrix> {
        self.entries.iter().find(|e| e.id() == id)
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

/// Sidecar record mapping a passage id to its document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageRef {
    pub passage_id: String,
    pub doc_id: String,
    pub passage_index: usize,
}

/// Passage embeddings plus the passage → document map; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    file: EmbeddingFile,
    refs: Vec<PassageRef>,
}

impl EmbeddingStore {
    /// Pairs each embedding with its sidecar record by passage id.
    pub fn new(file: EmbeddingFile, refs: Vec<PassageRef>) -> Result<Self> {
        let mut by_id: BTreeMap<&str, &PassageRef> = BTreeMap::new();
        for r in &refs {
            if by_id.insert(r.passage_id.as_str(), r).is_some() {
                return Err(Error::Input(format!("passage {} listed twice in sidecar", r.passage_id)));
            }
        }
        let mut ordered = Vec::with_capacity(file.entries.len());
        for e in &file.entries {
            let r = by_id
                .get(e.id())
                .ok_or_else(|| Error::Input(format!("passage {} has no document mapping", e.id())))?;
            ordered.push((*r).clone());
        }
        Ok(Self { file, refs: ordered })
    }

    /// Builds a store from passages and their embeddings; passage ids are
    /// `"{doc_id}#{index}"`.
    pub fn from_passages(mode: StoreMode, dim: usize, items: Vec<(Passage, TokenMatrix)>) -> Result<Self> {
        let mut entries = Vec::with_capacity(items.len());
        let mut refs = Vec::with_capacity(items.len());
        for (p, m) in items {
            let passage_id = format!("{}#{}", p.doc_id, p.index);
            entries.push(m.with_id(passage_id.clone()));
            refs.push(PassageRef {
                passage_id,
                doc_id: p.doc_id,
                passage_index: p.index,
            });
        }
        Self::new(EmbeddingFile::new(mode, dim, entries)?, refs)
    }

    pub fn mode(&self) -> StoreMode {
        self.file.mode
    }

    pub fn dim(&self) -> usize {
        self.file.dim
    }

    pub fn len(&self) -> usize {
        self.file.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.file.entries.is_empty()
    }

    pub fn matrix(&self, i: usize) -> &TokenMatrix {
        &self.file.entries[i]
    }

    /// The `i`-th entry as a single vector (its first row).
    pub fn single_vector(&self, i: usize) -> Result<SingleVector> {
        let m = &self.file.entries[i];
        SingleVector::new(m.id(), m.rows().next().expect("non-empty matrix").to_vec())
    }

    pub fn passage_ref(&self, i: usize) -> &PassageRef {
        &self.refs[i]
    }

    pub fn save(&self, bin: &Path, sidecar: &Path) -> Result<()> {
        self.file.save(bin)?;
        crate::text::write_jsonl(sidecar, &self.refs)
    }

    pub fn load(bin: &Path, sidecar: &Path) -> Result<Self> {
        use std::io::BufRead;
        let file = EmbeddingFile::load(bin)?;
        let mut refs = Vec::new();
        let reader = BufReader::new(std::fs::File::open(sidecar)?);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            refs.push(serde_json::from_str(&line).map_err(|e| Error::parse(sidecar, i + 1, e))?);
        }
        Self::new(file, refs)
    }
}
