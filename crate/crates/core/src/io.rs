//! File formats.
//!
//! Signals are CSV files with header `index,value` and a sidecar
//! `<stem>.json` holding `{"sample_rate": ...}`. FRFs are CSV
//! `freq,real,imag,variance`; ranked scans are CSV `bits,mse`. Structured
//! objects are JSON. Floats are written in shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bla::FrfEstimate;
use crate::brute_force::ScanResult;
use crate::error::{Error, Result};
use crate::ga::GaResult;
use crate::lti::Signal;

#[derive(Serialize, Deserialize)]
struct SignalMeta {
    sample_rate: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else {
        x.to_string()
    }
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn csv_rows(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found != header {
        return Err(Error::Parse(format!("expected header {}, found {}", header.join(","), found.join(","))));
    }
    r.records().map(|rec| rec.map_err(Error::from)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse(format!("row {line}: missing column {i}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {line}: cannot parse '{raw}'")))
}

pub fn signal_to_csv(signal: &Signal) -> Result<String> {
    csv_string(
        &["index", "value"],
        signal.samples().iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]),
    )
}

/// Parses signal CSV; rows must be in index order starting at 0.
pub fn signal_from_csv(text: &str, sample_rate: f64) -> Result<Signal> {
    let mut samples = Vec::new();
    for (line, rec) in csv_rows(text, &["index", "value"])?.iter().enumerate() {
        let index: usize = field(rec, 0, line)?;
        if index != line {
            return Err(Error::Parse(format!("row {line}: index {index} out of sequence")));
        }
        samples.push(field(rec, 1, line)?);
    }
    Signal::new(samples, sample_rate)
}

pub fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    fs::write(path, signal_to_csv(signal)?)?;
    write_json(
        &sidecar_path(path),
        &SignalMeta {
            sample_rate: signal.sample_rate(),
        },
    )
}

/// Reads a signal; without a sidecar the sample rate is 1.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let text = fs::read_to_string(path)?;
    let meta = sidecar_path(path);
    let rate = if meta.exists() {
        read_json::<SignalMeta>(&meta)?.sample_rate
    } else {
        1.0
    };
    signal_from_csv(&text, rate)
}

pub fn frf_to_csv(frf: &FrfEstimate) -> Result<String> {
    let rows = (0..frf.frequencies.len()).map(|k| {
        vec![
            fmt_f64(frf.frequencies[k]),
            fmt_f64(frf.response[k].re),
            fmt_f64(frf.response[k].im),
            fmt_f64(frf.sample_variance[k]),
        ]
    });
    csv_string(&["freq", "real", "imag", "variance"], rows)
}

/// Parses FRF CSV. Bins are marked valid when their response is finite;
/// the realization count is not stored and is set to 1.
pub fn frf_from_csv(text: &str) -> Result<FrfEstimate> {
    let mut frf = FrfEstimate {
        frequencies: vec![],
        response: vec![],
        sample_variance: vec![],
        realizations: 1,
        valid: vec![],
    };
    for (line, rec) in csv_rows(text, &["freq", "real", "imag", "variance"])?.iter().enumerate() {
        let h = Complex64::new(field(rec, 1, line)?, field(rec, 2, line)?);
        frf.frequencies.push(field(rec, 0, line)?);
        frf.valid.push(h.is_finite());
        frf.response.push(h);
        frf.sample_variance.push(field(rec, 3, line)?);
    }
    Ok(frf)
}

pub fn ranked_to_csv(scan: &ScanResult) -> Result<String> {
    csv_string(
        &["bits", "mse"],
        scan.ranked.iter().map(|r| vec![r.bits.to_string(), fmt_f64(r.mse)]),
    )
}

pub fn history_to_csv(ga: &GaResult) -> Result<String> {
    csv_string(
        &["generation", "best_cost"],
        ga.history.iter().enumerate().map(|(g, c)| vec![g.to_string(), fmt_f64(*c)]),
    )
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
