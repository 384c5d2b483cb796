//! Indexing-time accounting and the cost/effectiveness trade-off table.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wall-clock seconds per indexing stage. Translation is external and only
/// recorded; the other stages are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLedger {
    pub label: String,
    pub doc_count: usize,
    pub translation_seconds: f64,
    pub text_processing_seconds: f64,
    pub representation_seconds: f64,
    pub index_build_seconds: f64,
    pub total_seconds: f64,
    /// `total / doc_count`; absent for an empty collection.
    pub per_document_seconds: Option<f64>,
    /// Effectiveness of the configuration, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<f64>,
}

impl TimingLedger {
    pub fn new(label: impl Into<String>, doc_count: usize, translation: f64, text: f64, representation: f64, index_build: f64) -> Result<Self> {
        let stages = [translation, text, representation, index_build];
        if stages.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Input(format!("stage times must be finite and >= 0: {stages:?}")));
        }
        let total: f64 = stages.iter().sum();
        Ok(Self {
            label: label.into(),
            doc_count,
            translation_seconds: translation,
            text_processing_seconds: text,
            representation_seconds: representation,
            index_build_seconds: index_build,
            total_seconds: total,
            per_document_seconds: (doc_count > 0).then(|| total / doc_count as f64),
            map: None,
        })
    }

    /// A ledger that only knows its per-document cost, e.g. from a paper.
    pub fn from_per_document(label: impl Into<String>, doc_count: usize, per_document: f64) -> Result<Self> {
        Self::new(label, doc_count, 0.0, 0.0, per_document * doc_count as f64, 0.0)
    }

    pub fn stage_sum(&self) -> f64 {
        self.translation_seconds + self.text_processing_seconds + self.representation_seconds + self.index_build_seconds
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,seconds\n");
        for (stage, secs) in [
            ("translation", self.translation_seconds),
            ("text-processing", self.text_processing_seconds),
            ("representation", self.representation_seconds),
            ("index-build", self.index_build_seconds),
            ("total", self.total_seconds),
        ] {
            let _ = writeln!(out, "{stage},{secs}");
        }
        let _ = writeln!(out, "doc_count,{}", self.doc_count);
        let _ = writeln!(out, "per_document,{}", self.per_document_seconds.map(|s| s.to_string()).unwrap_or_default());
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ledger: Self = serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::parse(path, e.line(), e))?;
        let total = ledger.stage_sum();
        if (ledger.total_seconds - total).abs() > 0.01 * total.max(f64::MIN_POSITIVE) {
            return Err(Error::Input(format!(
                "{}: total {} differs from the stage sum {total} by more than 1%",
                path.display(),
                ledger.total_seconds
            )));
        }
        Ok(ledger)
    }
}

/// Measures consecutive stages.
pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    /// Seconds since the last lap.
    pub fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let secs = now.duration_since(self.0).as_secs_f64();
        self.0 = now;
        secs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationCost {
    pub label: String,
    pub per_document_seconds: Option<f64>,
    pub map: Option<f64>,
}

/// `1 − t_system / t_baseline`: the share of the baseline's per-document cost saved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduction {
    pub baseline: String,
    pub system: String,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub configurations: Vec<ConfigurationCost>,
    pub reductions: Vec<Reduction>,
    pub warnings: Vec<String>,
}

pub fn relative_reduction(system: f64, baseline: f64) -> f64 {
    1.0 - system / baseline
}

/// Reductions over every ordered pair of configurations with a defined,
/// positive per-document cost.
pub fn timing_report(ledgers: &[TimingLedger]) -> Result<TimingReport> {
    if ledgers.is_empty() {
        return Err(Error::Input("timing report needs at least one ledger".into()));
    }
    let mut warnings = Vec::new();
    for l in ledgers {
        if l.doc_count == 0 && l.total_seconds > 0.0 {
            warnings.push(format!("{}: {} s recorded for 0 documents; per-document cost undefined", l.label, l.total_seconds));
        }
    }
    let mut reductions = Vec::new();
    for baseline in ledgers {
        for system in ledgers {
            if std::ptr::eq(baseline, system) {
                continue;
            }
            if let (Some(tb), Some(ts)) = (baseline.per_document_seconds, system.per_document_seconds) {
                if tb > 0.0 {
                    reductions.push(Reduction {
                        baseline: baseline.label.clone(),
                        system: system.label.clone(),
                        reduction: relative_reduction(ts, tb),
                    });
                }
            }
        }
    }
    Ok(TimingReport {
        configurations: ledgers
            .iter()
            .map(|l| ConfigurationCost {
                label: l.label.clone(),
                per_document_seconds: l.per_document_seconds,
                map: l.map,
            })
            .collect(),
        reductions,
        warnings,
    })
}

impl TimingReport {
    pub fn reductions_csv(&self) -> String {
        let mut out = String::from("baseline,system,reduction\n");
        for r in &self.reductions {
            let _ = writeln!(out, "{},{},{}", r.baseline, r.system, r.reduction);
        }
        out
    }

    /// `(per-document seconds, MAP)` points for plotting.
    pub fn scatter_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("label,per_document_seconds,map\n");
        for c in &self.configurations {
            let _ = writeln!(out, "{},{},{}", c.label, opt(c.per_document_seconds), opt(c.map));
        }
        out
    }

    pub fn reduction(&self, baseline: &str, system: &str) -> Option<f64> {
        self.reductions
            .iter()
            .find(|r| r.baseline == baseline && r.system == system)
            .map(|r| r.reduction)
    }
}
