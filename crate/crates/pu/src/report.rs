//! Writes raw.csv, aggregate.csv and timings.csv.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pu_core::metrics::MetricsRow;

pub const RAW_HEADER: [&str; 10] = [
    "classifier",
    "c",
    "n",
    "replication",
    "f1",
    "balanced_accuracy",
    "angle_degrees",
    "eta_hat",
    "train_seconds",
    "status",
];

/// Shortest round-trip text; absent and non-finite values become empty.
fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn writer(path: &Path) -> io::Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

/// Per-replication rows in a fixed column order. Wall times are written only
/// when `with_timing` is set.
pub fn emit_report(rows: &[MetricsRow], path: &Path, with_timing: bool) -> io::Result<()> {
    if rows.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "no rows to report",
        ));
    }
    let mut w = writer(path)?;
    w.write_record(RAW_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.classifier.clone(),
            format!("{}", r.c),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.replication.to_string(),
            cell(Some(r.f1)),
            cell(Some(r.balanced_accuracy)),
            cell(r.angle_degrees),
            cell(r.eta_hat),
            cell(with_timing.then_some(r.train_seconds)),
            r.status.clone(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation over `√k`; NaN for fewer than two values.
    pub se: f64,
    pub count: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    let k = values.len();
    if k == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let se = if k > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (k - 1) as f64).sqrt() / (k as f64).sqrt()
    } else {
        f64::NAN
    };
    Some(Summary { mean, se, count: k })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub classifier: String,
    pub c: f64,
    pub n: Option<usize>,
    pub succeeded: usize,
    pub failed: usize,
    pub f1: Option<Summary>,
    pub balanced_accuracy: Option<Summary>,
    pub angle_degrees: Option<Summary>,
    pub eta_hat: Option<Summary>,
    pub mean_train_seconds: f64,
}

/// Groups consecutive rows sharing (classifier, c, n). Failed rows count
/// toward `failed` and the timing mean only.
pub fn aggregate(rows: &[MetricsRow]) -> Vec<CellSummary> {
    let same =
        |a: &MetricsRow, b: &MetricsRow| a.classifier == b.classifier && a.c == b.c && a.n == b.n;
    rows.chunk_by(|a, b| same(a, b))
        .map(|cell| {
            let ok: Vec<&MetricsRow> = cell.iter().filter(|r| r.is_ok()).collect();
            let pick = |f: &dyn Fn(&MetricsRow) -> Option<f64>| -> Option<Summary> {
                summarize(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let times: Vec<f64> = cell
                .iter()
                .map(|r| r.train_seconds)
                .filter(|t| t.is_finite())
                .collect();
            CellSummary {
                classifier: cell[0].classifier.clone(),
                c: cell[0].c,
                n: cell[0].n,
                succeeded: ok.len(),
                failed: cell.len() - ok.len(),
                f1: pick(&|r| Some(r.f1)),
                balanced_accuracy: pick(&|r| Some(r.balanced_accuracy)),
                angle_degrees: pick(&|r| r.angle_degrees),
                eta_hat: pick(&|r| r.eta_hat),
                mean_train_seconds: summarize(&times).map_or(f64::NAN, |s| s.mean),
            }
        })
        .collect()
}

fn key_cells(s: &CellSummary) -> [String; 3] {
    [
        s.classifier.clone(),
        format!("{}", s.c),
        s.n.map(|n| n.to_string()).unwrap_or_default(),
    ]
}

pub fn write_aggregate(cells: &[CellSummary], path: &Path) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "classifier",
        "c",
        "n",
        "succeeded",
        "failed",
        "f1_mean",
        "f1_se",
        "balanced_accuracy_mean",
        "balanced_accuracy_se",
        "angle_degrees_mean",
        "angle_degrees_se",
        "eta_hat_mean",
        "eta_hat_se",
    ])
    .map_err(csv_error)?;
    for s in cells {
        let mut rec: Vec<String> = key_cells(s).into();
        rec.push(s.succeeded.to_string());
        rec.push(s.failed.to_string());
        for m in [&s.f1, &s.balanced_accuracy, &s.angle_degrees, &s.eta_hat] {
            rec.push(cell(m.map(|m| m.mean)));
            rec.push(cell(m.map(|m| m.se)));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_timings(cells: &[CellSummary], path: &Path) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["classifier", "c", "n", "replications", "mean_train_seconds"])
        .map_err(csv_error)?;
    for s in cells {
        let mut rec: Vec<String> = key_cells(s).into();
        rec.push((s.succeeded + s.failed).to_string());
        rec.push(cell(Some(s.mean_train_seconds)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub raw: PathBuf,
    pub aggregate: PathBuf,
    pub timings: PathBuf,
}

/// Creates `dir` if needed and writes all three reports into it.
pub fn write_reports(
    dir: &Path,
    rows: &[MetricsRow],
    with_timing: bool,
) -> io::Result<ReportPaths> {
    fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        raw: dir.join("raw.csv"),
        aggregate: dir.join("aggregate.csv"),
        timings: dir.join("timings.csv"),
    };
    emit_report(rows, &paths.raw, with_timing)?;
    let cells = aggregate(rows);
    write_aggregate(&cells, &paths.aggregate)?;
    write_timings(&cells, &paths.timings)?;
    Ok(paths)
}
