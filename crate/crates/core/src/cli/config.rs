use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixer::MixMode;
use crate::sparse::Bm25Params;
use crate::text::{AnalyzerConfig, DEFAULT_STRIDE, DEFAULT_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum RetrievalMode {
    #[default]
    #[serde(rename = "bm25")]
    Bm25,
    #[serde(rename = "maxsim")]
    Maxsim,
    #[serde(rename = "single-vector")]
    #[value(name = "single-vector")]
    SingleVector,
}

impl RetrievalMode {
    pub fn name(self) -> &'static str {
        match self {
            RetrievalMode::Bm25 => "bm25",
            RetrievalMode::Maxsim => "maxsim",
            RetrievalMode::SingleVector => "single-vector",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixSection {
    pub mode: MixMode,
    /// Per-language triple files; the list order is the rotation order.
    pub triples: Vec<LangPath>,
    pub batch_size: usize,
    pub shuffle: bool,
    pub replicas: usize,
}

impl Default for MixSection {
    fn default() -> Self {
        Self {
            mode: MixMode::MttM,
            triples: Vec::new(),
            batch_size: 32,
            shuffle: false,
            replicas: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangPath {
    pub lang: String,
    pub path: PathBuf,
}

impl std::str::FromStr for LangPath {
    type Err = String;

    /// `lang=path`
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once('=') {
            Some((lang, path)) if !lang.is_empty() && !path.is_empty() => Ok(Self {
                lang: lang.to_string(),
                path: PathBuf::from(path),
            }),
            _ => Err(format!("expected LANG=PATH, got {s:?}")),
        }
    }
}

/// Everything a pipeline run needs; loaded from TOML and overridden by flags.
/// Relative paths in a config file resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub qrels: Vec<LangPath>,
    pub analyzer: AnalyzerConfig,
    pub mode: RetrievalMode,
    pub bm25: Bm25Params,
    /// Toy embedding dimension for the dense modes.
    pub dim: usize,
    pub k: usize,
    pub window: usize,
    pub stride: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub tag: Option<String>,
    pub reference_lang: String,
    pub strip_stop_structure: bool,
    pub stop_structure: Option<PathBuf>,
    /// Externally measured translation time, entered into the ledger as is.
    pub translation_seconds: f64,
    pub bonferroni: usize,
    pub mix: MixSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            topics: None,
            qrels: Vec::new(),
            analyzer: AnalyzerConfig::default(),
            mode: RetrievalMode::Bm25,
            bm25: Bm25Params::default(),
            dim: 32,
            k: 1000,
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            seed: 0,
            output: PathBuf::from("out"),
            tag: None,
            reference_lang: "en".into(),
            strip_stop_structure: true,
            stop_structure: None,
            translation_seconds: 0.0,
            bonferroni: 1,
            mix: MixSection::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn parse(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.topics, &mut cfg.stop_structure].into_iter().flatten() {
            rebase(base, p);
        }
        for lp in cfg.qrels.iter_mut().chain(cfg.mix.triples.iter_mut()) {
            rebase(base, &mut lp.path);
        }
        rebase(base, &mut cfg.output);
        Ok(cfg)
    }

    pub fn tag(&self) -> String {
        self.tag.clone().unwrap_or_else(|| self.mode.name().to_string())
    }

    pub(crate) fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
        let path = field
            .as_deref()
            .ok_or_else(|| Error::Config(format!("no {name} configured")))?;
        if !path.exists() {
            return Err(Error::Config(format!("{name} {} does not exist", path.display())));
        }
        Ok(path)
    }

    pub(crate) fn require_qrels(&self) -> Result<&[LangPath]> {
        if self.qrels.is_empty() {
            return Err(Error::Config("no qrels configured".into()));
        }
        if let Some(lp) = self.qrels.iter().find(|lp| !lp.path.exists()) {
            return Err(Error::Config(format!("qrels {} does not exist", lp.path.display())));
        }
        Ok(&self.qrels)
    }

    /// Checks the options every command shares.
    pub fn validate(&self) -> Result<()> {
        self.bm25.validate()?;
        crate::text::window_spans(0, self.window, self.stride)?;
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.mode != RetrievalMode::Bm25 && self.dim < 2 {
            return Err(Error::Config(format!("dense modes need dim >= 2, got {}", self.dim)));
        }
        if !(self.translation_seconds >= 0.0 && self.translation_seconds.is_finite()) {
            return Err(Error::Config("translation_seconds must be finite and >= 0".into()));
        }
        if self.bonferroni == 0 {
            return Err(Error::Config("bonferroni factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Per-language qrels paths keyed by language, in configured order.
    pub fn qrels_map(&self) -> BTreeMap<&str, &Path> {
        self.qrels.iter().map(|lp| (lp.lang.as_str(), lp.path.as_path())).collect()
    }
}
