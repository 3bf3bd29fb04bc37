//! CSV and JSON writers for result rows.

use std::io::Write;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::ResultRow;
use crate::BenchError;

pub const CSV_HEADER: &str = "family,sweep_value,estimator,rmse_m,crlb_m,trials_used,failures";

/// How `rmse_m` is computed; included in JSON output.
pub const RMSE_NOTE: &str =
    "rmse_m is computed over each estimator's own successful trials; empty when every trial failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(runtime)?;
    }
    for row in rows {
        w.serialize(row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    rmse_note: &'a str,
    config: &'a ExperimentConfig,
    rows: &'a [ResultRow],
}

pub fn write_json<W: Write>(mut out: W, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<(), BenchError> {
    let report = JsonReport { rmse_note: RMSE_NOTE, config: cfg, rows };
    serde_json::to_writer_pretty(&mut out, &report).map_err(runtime)?;
    writeln!(out).map_err(runtime)?;
    Ok(())
}

pub fn write_rows<W: Write>(out: W, format: Format, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<(), BenchError> {
    match format {
        Format::Csv => write_csv(out, rows),
        Format::Json => write_json(out, cfg, rows),
    }
}

fn runtime(e: impl std::fmt::Display) -> BenchError {
    BenchError::Runtime(format!("writing output: {e}"))
}
