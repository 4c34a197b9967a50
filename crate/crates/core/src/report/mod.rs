//! Run ledgers, aggregation into metric reports, and report emission.
//!
//! Every metric observation is a [`LedgerEntry`]. A [`MetricReport`] groups
//! entries by key, averages their values and keeps the sample size, so each
//! report row can be traced back to the entries it summarizes.

mod emit;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use emit::{emit, plot_rows, svg_bar_chart, Format, PlotRow, PLOT_COLUMNS, REPORT_COLUMNS};
pub use manifest::{sha256_hex, Manifest, ManifestEntry};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("ledgers mix run ids {0} and {1}")]
    MixedRunIds(String, String),
    #[error("ledger entry {0} appears twice with different contents")]
    ConflictingEntry(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("ledger: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Exclusion,
    Nonuniformity,
    ViolationRate,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Exclusion, Metric::Nonuniformity, Metric::ViolationRate];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Exclusion => "exclusion",
            Metric::Nonuniformity => "nonuniformity",
            Metric::ViolationRate => "violation_rate",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ReportError::Format(format!("unknown metric {s:?}")))
    }
}

/// One metric observation.
///
/// * exclusion: one job and one contrast; `level` is n; value in [0, 1].
/// * nonuniformity: one job or occupation; `level` is x; value 1 when the
///   uniform hypothesis is rejected, else 0.
/// * violation_rate: one paired t-test; value 100 when rejected after
///   correction, else 0, so row means are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub schema_version: u32,
    pub run_id: String,
    pub entry_id: String,
    pub metric: Metric,
    pub model: String,
    pub perturbation: String,
    pub direction: String,
    pub level: String,
    pub mode: String,
    pub unit: String,
    pub draw: u32,
    pub value: f64,
}

impl LedgerEntry {
    /// Builds an entry whose id is derived from every key field.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        run_id: &str,
        metric: Metric,
        model: &str,
        perturbation: &str,
        direction: &str,
        level: &str,
        mode: &str,
        unit: &str,
        draw: u32,
        value: f64,
    ) -> Self {
        let entry_id = [metric.as_str(), model, perturbation, direction, level, mode, unit, &draw.to_string()].join("|");
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            run_id: run_id.into(),
            entry_id,
            metric,
            model: model.into(),
            perturbation: perturbation.into(),
            direction: direction.into(),
            level: level.into(),
            mode: mode.into(),
            unit: unit.into(),
            draw,
            value,
        }
    }
}

pub fn write_ledger<W: Write>(w: W, entries: &[LedgerEntry]) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(w);
    for e in entries {
        out.serialize(e).map_err(|e| ReportError::Format(e.to_string()))?;
    }
    out.flush().map_err(|e| ReportError::Format(e.to_string()))
}

pub fn read_ledger<R: Read>(r: R) -> Result<Vec<LedgerEntry>, ReportError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| {
            let e: LedgerEntry = row.map_err(|e| ReportError::Format(e.to_string()))?;
            if e.schema_version != REPORT_SCHEMA_VERSION {
                return Err(ReportError::Format(format!("unsupported schema version {}", e.schema_version)));
            }
            Ok(e)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: Metric,
    pub model: String,
    pub perturbation: String,
    pub direction: String,
    pub level: String,
    pub mode: String,
    pub value: f64,
    pub sample_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub run_id: String,
    pub manifest_digest: String,
    pub rows: Vec<ReportRow>,
}

/// Requires every entry to carry the manifest's run id, deduplicates entries
/// by id and averages them per (metric, model, perturbation, direction,
/// level, mode). Rows come out in lexicographic key order.
pub fn aggregate(manifest: &Manifest, ledgers: &[Vec<LedgerEntry>]) -> Result<MetricReport, ReportError> {
    let run_id = manifest.run_id();
    for e in ledgers.iter().flatten() {
        if e.run_id != run_id {
            return Err(ReportError::MixedRunIds(run_id, e.run_id.clone()));
        }
    }
    let mut seen: BTreeMap<&str, &LedgerEntry> = BTreeMap::new();
    for e in ledgers.iter().flatten() {
        match seen.get(e.entry_id.as_str()) {
            Some(prev) if *prev != e => return Err(ReportError::ConflictingEntry(e.entry_id.clone())),
            Some(_) => {}
            None => {
                seen.insert(&e.entry_id, e);
            }
        }
    }
    type Key<'a> = (Metric, &'a str, &'a str, &'a str, &'a str, &'a str);
    let mut groups: BTreeMap<Key<'_>, (f64, usize)> = BTreeMap::new();
    for e in seen.values() {
        let g = groups
            .entry((e.metric, &e.model, &e.perturbation, &e.direction, &e.level, &e.mode))
            .or_default();
        g.0 += e.value;
        g.1 += 1;
    }
    let rows = groups
        .into_iter()
        .map(|((metric, model, perturbation, direction, level, mode), (sum, n))| ReportRow {
            metric,
            model: model.into(),
            perturbation: perturbation.into(),
            direction: direction.into(),
            level: level.into(),
            mode: mode.into(),
            value: sum / n as f64,
            sample_size: n,
        })
        .collect();
    Ok(MetricReport { schema_version: REPORT_SCHEMA_VERSION, run_id, manifest_digest: manifest.digest(), rows })
}
