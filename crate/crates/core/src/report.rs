//! CSV and JSON reports. Times are milliseconds with three decimals, so
//! identical inputs always serialize to identical bytes.

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::sim::{AuthReport, MatrixRow};

pub const MATRIX_COLUMNS: [&str; 12] = [
    "scenario",
    "algorithm",
    "band",
    "situation",
    "median_ms",
    "p95_ms",
    "client_ms",
    "ap_ms",
    "server_ms",
    "eap_messages",
    "frames",
    "abort_rate",
];

pub const RUN_COLUMNS: [&str; 8] = [
    "run",
    "total_ms",
    "client_ms",
    "ap_ms",
    "server_ms",
    "eap_messages",
    "frames",
    "aborted",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Milliseconds, rounded half-up to the microsecond.
pub fn millis(d: Duration) -> String {
    let us = (d.as_nanos() + 500) / 1000;
    format!("{}.{:03}", us / 1000, us % 1000)
}

fn rate(r: f64) -> String {
    format!("{r:.3}")
}

fn write_csv<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Numbers stay as fixed-precision strings in JSON too.
#[derive(Serialize)]
struct JsonRow<'a> {
    scenario: &'a str,
    algorithm: &'a str,
    kem: &'a str,
    band: &'a str,
    situation: &'a str,
    method: &'a str,
    resumption: bool,
    seed: u64,
    median_ms: Option<String>,
    p95_ms: Option<String>,
    client_ms: Option<String>,
    ap_ms: Option<String>,
    server_ms: Option<String>,
    eap_messages: Option<u64>,
    frames: Option<u64>,
    abort_rate: String,
    error: Option<String>,
}

#[derive(Serialize)]
struct JsonDoc<T> {
    seed: u64,
    rows: Vec<T>,
}

/// One row per matrix cell, in input order. Cells whose batch failed keep
/// their identifiers, leave the measurements empty and report an abort rate
/// of 1.
pub fn emit_report(rows: &[MatrixRow], format: Format, seed: u64) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    match format {
        Format::Csv => write_csv(
            &MATRIX_COLUMNS,
            rows.iter().map(|row| {
                let s = &row.scenario;
                let mut cells = vec![
                    s.id.clone(),
                    row.signature.clone(),
                    s.band.band.to_string(),
                    s.situation.situation.to_string(),
                ];
                match &row.stats {
                    Ok(st) => cells.extend([
                        millis(st.median),
                        millis(st.p95),
                        millis(st.client_median),
                        millis(st.ap_median),
                        millis(st.server_median),
                        st.logical_eap_messages.to_string(),
                        st.median_frames.to_string(),
                        rate(st.abort_rate),
                    ]),
                    Err(_) => {
                        cells.extend(std::iter::repeat_n(String::new(), 7));
                        cells.push(rate(1.0));
                    }
                }
                cells
            }),
        ),
        Format::Json => {
            let rows = rows
                .iter()
                .map(|row| {
                    let s = &row.scenario;
                    let ok = row.stats.as_ref().ok();
                    JsonRow {
                        scenario: &s.id,
                        algorithm: &row.signature,
                        kem: &row.kem,
                        band: s.band.band.as_str(),
                        situation: s.situation.situation.as_str(),
                        method: s.method.as_str(),
                        resumption: s.resumption,
                        seed: s.seed,
                        median_ms: ok.map(|st| millis(st.median)),
                        p95_ms: ok.map(|st| millis(st.p95)),
                        client_ms: ok.map(|st| millis(st.client_median)),
                        ap_ms: ok.map(|st| millis(st.ap_median)),
                        server_ms: ok.map(|st| millis(st.server_median)),
                        eap_messages: ok.map(|st| st.logical_eap_messages),
                        frames: ok.map(|st| st.median_frames),
                        abort_rate: rate(ok.map_or(1.0, |st| st.abort_rate)),
                        error: row.stats.as_ref().err().map(|e| e.to_string()),
                    }
                })
                .collect();
            Ok(serde_json::to_string_pretty(&JsonDoc { seed, rows }).expect("report serializes") + "\n")
        }
    }
}

#[derive(Serialize)]
struct JsonRun {
    run: u32,
    total_ms: String,
    client_ms: String,
    ap_ms: String,
    server_ms: String,
    eap_messages: u64,
    frames: u64,
    aborted: bool,
}

/// Per-run reports of a single scenario.
pub fn emit_runs(runs: &[AuthReport], format: Format, seed: u64) -> Result<String, ReportError> {
    if runs.is_empty() {
        return Err(ReportError::Empty);
    }
    let rows = runs.iter().map(|r| JsonRun {
        run: r.run_index,
        total_ms: millis(r.total),
        client_ms: millis(r.client_time),
        ap_ms: millis(r.ap_time),
        server_ms: millis(r.server_time),
        eap_messages: r.logical_eap_messages,
        frames: r.transmitted_frames,
        aborted: r.aborted,
    });
    match format {
        Format::Csv => write_csv(
            &RUN_COLUMNS,
            rows.map(|r| {
                vec![
                    r.run.to_string(),
                    r.total_ms,
                    r.client_ms,
                    r.ap_ms,
                    r.server_ms,
                    r.eap_messages.to_string(),
                    r.frames.to_string(),
                    r.aborted.to_string(),
                ]
            }),
        ),
        Format::Json => Ok(serde_json::to_string_pretty(&JsonDoc {
            seed,
            rows: rows.collect(),
        })
        .expect("report serializes")
            + "\n"),
    }
}
