//! CSV and JSON output of Monte-Carlo reports.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::MonteCarloReport;
use crate::error::{IsacError, Result};

pub const CSV_HEADER: [&str; 8] =
    ["method", "theta", "rho", "episode", "aasr_true", "aasr_nominal", "aasr_robust", "coverage"];

/// One (episode, θ) pair. `coverage` is 1 when the true AASR reaches the
/// robust AASR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: String,
    pub theta: f64,
    pub rho: f64,
    pub episode: usize,
    pub aasr_true: f64,
    pub aasr_nominal: f64,
    pub aasr_robust: f64,
    pub coverage: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(IsacError::InvalidParameter {
                name: "format".into(),
                reason: format!("expected csv or json, got {other}"),
            }),
        }
    }
}

pub fn rows(report: &MonteCarloReport) -> Vec<CsvRow> {
    let mut out = Vec::new();
    let method = report.method.name().to_string();
    for block in &report.blocks {
        for p in &block.points {
            let Some(robust) = p.aasr_robust else { continue };
            for (e, (&t, &n)) in p.true_aasr.iter().zip(&block.nominal_true).enumerate() {
                out.push(CsvRow {
                    method: method.clone(),
                    theta: p.theta,
                    rho: block.rho,
                    episode: e,
                    aasr_true: t,
                    aasr_nominal: n,
                    aasr_robust: robust,
                    coverage: u8::from(t >= robust),
                });
            }
        }
    }
    out
}

fn io_err(path: &Path, source: std::io::Error) -> IsacError {
    IsacError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> IsacError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        other => IsacError::Parse { path: path.to_path_buf(), line, msg: format!("{other:?}") },
    }
}

pub fn write_csv_to<W: Write>(report: &MonteCarloReport, writer: W, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for row in rows(report) {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_csv(report: &MonteCarloReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_csv_to(report, file, path)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub fn write_json(report: &MonteCarloReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report)
        .map_err(|e| IsacError::Parse { path: path.to_path_buf(), line: e.line(), msg: e.to_string() })
}

pub fn read_json(path: &Path) -> Result<MonteCarloReport> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| IsacError::Parse { path: path.to_path_buf(), line: e.line(), msg: e.to_string() })
}

pub fn emit(report: &MonteCarloReport, path: &Path, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(report, path),
        OutputFormat::Json => write_json(report, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust::Method;
    use crate::simkit::stats::PercentileMethod;

    fn empty() -> MonteCarloReport {
        MonteCarloReport {
            method: Method::M1,
            episodes: 0,
            master_seed: 1,
            epsilon: 0.05,
            percentile: PercentileMethod::NearestRank,
            blocks: Vec::new(),
            failures: 0,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&empty(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim(), CSV_HEADER.join(","));
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_json(&empty(), &path).unwrap();
        assert_eq!(read_json(&path).unwrap(), empty());
    }

    #[test]
    fn io_error_names_path() {
        let path = Path::new("/nonexistent-dir/x.csv");
        let err = write_csv(&empty(), path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"), "{err}");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
