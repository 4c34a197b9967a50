//! Report files: tabular CSV, structured JSON, plot data and optional SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Metric, MetricReport, ReportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    PlotData,
    Svg,
}


#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub x: String,
    pub y: f64,
    pub series: String,
}

fn joined(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join(" ")
}

/// Bar-chart data for one metric, in report row order.
///
/// * exclusion: x = perturbation and direction, y = percent, series = model and n.
/// * nonuniformity: x = model, y = percent of units flagged, series = perturbation, x and mode.
/// * violation_rate: x = model, y = percent, series = comparison type.
pub fn plot_rows(report: &MetricReport, metric: Metric) -> Vec<PlotRow> {
    report
        .rows
        .iter()
        .filter(|r| r.metric == metric)
        .map(|r| match metric {
            Metric::Exclusion => PlotRow {
                x: joined(&[&r.perturbation, &r.direction]),
                y: r.value * 100.0,
                series: joined(&[&r.model, &format!("n={}", r.level)]),
            },
            Metric::Nonuniformity => PlotRow {
                x: r.model.clone(),
                y: r.value * 100.0,
                series: joined(&[&r.perturbation, &format!("x={}", r.level), &r.mode]),
            },
            Metric::ViolationRate => PlotRow { x: r.model.clone(), y: r.value, series: r.perturbation.clone() },
        })
        .collect()
}

fn io_err(path: &Path, e: impl ToString) -> ReportError {
    ReportError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf, ReportError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| ReportError::Format(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| ReportError::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| ReportError::Format(e.to_string()))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    run_id: &'a str,
    manifest_digest: &'a str,
    metric: Metric,
    model: &'a str,
    perturbation: &'a str,
    direction: &'a str,
    level: &'a str,
    mode: &'a str,
    value: f64,
    sample_size: usize,
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "schema_version",
    "run_id",
    "manifest_digest",
    "metric",
    "model",
    "perturbation",
    "direction",
    "level",
    "mode",
    "value",
    "sample_size",
];

pub const PLOT_COLUMNS: [&str; 3] = ["x", "y", "series"];

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit(report: &MetricReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Csv => {
                let rows = report.rows.iter().map(|r| CsvRow {
                    schema_version: report.schema_version,
                    run_id: &report.run_id,
                    manifest_digest: &report.manifest_digest,
                    metric: r.metric,
                    model: &r.model,
                    perturbation: &r.perturbation,
                    direction: &r.direction,
                    level: &r.level,
                    mode: &r.mode,
                    value: r.value,
                    sample_size: r.sample_size,
                });
                written.push(write(&dir.join("report.csv"), &csv_bytes(rows, &REPORT_COLUMNS)?)?);
            }
            Format::Json => {
                let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| ReportError::Format(e.to_string()))?;
                bytes.push(b'\n');
                written.push(write(&dir.join("report.json"), &bytes)?);
            }
            Format::PlotData => {
                for m in Metric::ALL {
                    let bytes = csv_bytes(plot_rows(report, m), &PLOT_COLUMNS)?;
                    written.push(write(&dir.join(format!("plot_{m}.csv")), &bytes)?);
                }
            }
            Format::Svg => {
                for m in Metric::ALL {
                    let svg = svg_bar_chart(&plot_rows(report, m), m.as_str());
                    written.push(write(&dir.join(format!("plot_{m}.svg")), svg.as_bytes())?);
                }
            }
        }
    }
    Ok(written)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

/// Grouped bar chart: one group per x, one bar per series.
pub fn svg_bar_chart(rows: &[PlotRow], title: &str) -> String {
    let mut xs: Vec<&str> = Vec::new();
    let mut series: Vec<&str> = Vec::new();
    let mut values: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in rows {
        if !xs.contains(&r.x.as_str()) {
            xs.push(&r.x);
        }
        if !series.contains(&r.series.as_str()) {
            series.push(&r.series);
        }
        values.insert((&r.x, &r.series), r.y);
    }
    let bar = 12.0;
    let gap = 16.0;
    let plot_h = 200.0;
    let left = 50.0;
    let top = 30.0;
    let group_w = bar * series.len().max(1) as f64 + gap;
    let width = left + group_w * xs.len().max(1) as f64 + 20.0;
    let legend_h = 14.0 * series.len() as f64;
    let height = top + plot_h + 90.0 + legend_h;
    let y_max = rows.iter().map(|r| r.y).fold(0.0f64, f64::max).max(1e-12);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="16" font-size="12">{}</text>"#, escape(title));
    let base = top + plot_h;
    let _ = writeln!(s, r#"<line x1="{left}" y1="{base}" x2="{:.1}" y2="{base}" stroke="black"/>"#, width - 10.0);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y_max:.2}</text>"#, left - 4.0, top + 4.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{base:.1}" text-anchor="end">0</text>"#, left - 4.0);
    for (i, x) in xs.iter().enumerate() {
        let gx = left + gap / 2.0 + group_w * i as f64;
        for (j, ser) in series.iter().enumerate() {
            if let Some(v) = values.get(&(*x, *ser)) {
                let h = (v.max(0.0) / y_max) * plot_h;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="{bar}" height="{h:.1}" fill="{}"/>"#,
                    gx + bar * j as f64,
                    base - h,
                    PALETTE[j % PALETTE.len()]
                );
            }
        }
        let lx = gx + group_w / 2.0 - gap / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-40 {lx:.1} {:.1})">{}</text>"#,
            base + 12.0,
            base + 12.0,
            escape(x)
        );
    }
    for (j, ser) in series.iter().enumerate() {
        let y = base + 80.0 + 14.0 * j as f64;
        let _ = writeln!(s, r#"<rect x="{left}" y="{:.1}" width="10" height="10" fill="{}"/>"#, y - 9.0, PALETTE[j % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, left + 14.0, escape(ser));
    }
    s.push_str("</svg>\n");
    s
}
