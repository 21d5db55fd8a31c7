use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// JSON for `.json` paths, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "family",
    "dims",
    "method",
    "fwd_mean",
    "fwd_std",
    "bwd_mean",
    "bwd_std",
    "total_mean",
    "total_std",
    "cos_sim_mean",
    "cos_sim_std",
    "fd_rel_err",
    "failures",
];

/// Flat record, one per CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub family: String,
    pub dims: String,
    pub method: String,
    pub fwd_mean: f64,
    pub fwd_std: f64,
    pub bwd_mean: f64,
    pub bwd_std: f64,
    pub total_mean: f64,
    pub total_std: f64,
    pub cos_sim_mean: f64,
    pub cos_sim_std: f64,
    pub fd_rel_err: f64,
    pub failures: usize,
}

impl From<&BenchRow> for ReportRecord {
    fn from(r: &BenchRow) -> Self {
        ReportRecord {
            family: r.family.to_string(),
            dims: r.dims.to_string(),
            method: r.method.to_string(),
            fwd_mean: r.fwd_time_s.mean,
            fwd_std: r.fwd_time_s.std,
            bwd_mean: r.bwd_time_s.mean,
            bwd_std: r.bwd_time_s.std,
            total_mean: r.total_time_s.mean,
            total_std: r.total_time_s.std,
            cos_sim_mean: r.cos_sim.mean,
            cos_sim_std: r.cos_sim.std,
            fd_rel_err: r.fd_rel_err,
            failures: r.failures,
        }
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    // header written by hand so an empty report still has one
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(ReportRecord::from(row))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_json<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let records: Vec<ReportRecord> = rows.iter().map(ReportRecord::from).collect();
    serde_json::to_writer_pretty(out, &records)?;
    Ok(())
}

/// Writes the report; IO errors carry the target path.
pub fn emit_report(rows: &[BenchRow], format: ReportFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let out = std::io::BufWriter::new(file);
    match format {
        ReportFormat::Csv => write_csv(rows, out),
        ReportFormat::Json => write_json(rows, out),
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
